#include "proxcausal/cli.hpp"

int main(int argc, char** argv) { return proxcausal::cli::main_entry(argc, argv); }
