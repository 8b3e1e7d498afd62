// Simulate confounded data, then compare a naive regression with the proxy
// estimators on point and longitudinal data.

#include <cstdio>

#include "proxcausal/inference.hpp"
#include "proxcausal/longitudinal_estimators.hpp"
#include "proxcausal/point_estimators.hpp"
#include "proxcausal/synthetic_dgp.hpp"

using namespace proxcausal;

int main() {
  PointDgpSpec spec;  // beta_a = -1.8, U confounds A and Y
  spec.seed = 2024;
  const auto sim = generate_point(spec, 5000);

  const auto ols = fit_ols_baseline(sim.data);
  const auto p2sls = fit_p2sls(sim.data);
  std::printf("truth            %8.4f\n", sim.truth.contrast());
  std::printf("OLS (X only)     %8.4f  se %.4f\n", ols.contrast->value, ols.contrast->se);
  std::printf("P2SLS            %8.4f  se %.4f\n", p2sls.contrast->value, p2sls.contrast->se);

  BootstrapOptions b;
  b.B = 200;
  b.seed = 1;
  const auto boot = bootstrap_estimate(sim.data, [](const Dataset& d) { return fit_p2sls(d); }, b);
  std::printf("P2SLS 95%% bootstrap CI [%.4f, %.4f]\n", boot.ci_lower(0), boot.ci_upper(0));

  auto lspec = default_longitudinal_spec();
  lspec.seed = 7;
  const auto panel = generate_longitudinal(lspec, 5000);
  const auto rec = fit_recursive_ls(panel.data);
  const auto ipw = fit_ipw_msm(panel.data);
  std::printf("\nregime   truth   recursive   ipw\n");
  for (std::size_t k = 0; k < rec.estimate.regimes.size(); ++k) {
    const auto& r = rec.estimate.regimes[k];
    std::printf("(%g,%g)  %7.3f  %9.3f  %6.3f\n", r[0], r[1], panel.truth.beta(r), rec.estimate.beta[k].value,
                ipw.beta_at(r).value);
  }
  return 0;
}
