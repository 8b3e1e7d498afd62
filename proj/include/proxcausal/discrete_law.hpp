#pragma once

// Joint probability tables over categorical variables. Variable names follow
// the proxy taxonomy: "U" (latent), "X", "Z", "W", "A", "Y". The outcome's
// category index doubles as its numeric value.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/errors.hpp"

namespace proxcausal {

struct CategoricalVariable {
  std::string name;
  std::size_t categories = 2;
  bool operator==(const CategoricalVariable&) const = default;
};

/// Partial assignment: (variable name, category) pairs.
using Cell = std::vector<std::pair<std::string, std::size_t>>;

class DiscreteJointLaw {
 public:
  DiscreteJointLaw(std::vector<CategoricalVariable> variables, std::vector<double> probabilities)
      : vars_(std::move(variables)), p_(std::move(probabilities)) {
    std::size_t cells = 1;
    for (const auto& v : vars_) {
      if (v.categories < 1) fail(ErrorCode::InvalidLaw, "variable '" + v.name + "' has no categories");
      cells *= v.categories;
    }
    if (cells != p_.size())
      fail(ErrorCode::InvalidLaw, "table has " + std::to_string(p_.size()) + " entries, expected " + std::to_string(cells));
    double total = 0.0;
    for (double q : p_) {
      if (!(q >= 0.0) || !std::isfinite(q)) fail(ErrorCode::InvalidLaw, "negative or non-finite probability");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorCode::InvalidLaw, "probabilities sum to " + std::to_string(total));
    strides_.assign(vars_.size(), 1);
    for (std::size_t k = vars_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * vars_[k].categories;
  }

  const std::vector<CategoricalVariable>& variables() const { return vars_; }
  const std::vector<double>& probabilities() const { return p_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t k = 0; k < vars_.size(); ++k)
      if (vars_[k].name == name) return k;
    return std::nullopt;
  }
  bool has(const std::string& name) const { return index_of(name).has_value(); }
  /// Number of categories, or 0 when the variable is absent.
  std::size_t cardinality(const std::string& name) const {
    auto k = index_of(name);
    return k ? vars_[*k].categories : 0;
  }

  /// Category of variable k in flat cell c.
  std::size_t category(std::size_t cell, std::size_t k) const { return (cell / strides_[k]) % vars_[k].categories; }

  /// Sum of f(cell) * P(cell) over cells matching a partial assignment.
  template <class F>
  double sum(const Cell& fixed, F&& f) const {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (const auto& [name, cat] : fixed) {
      auto k = index_of(name);
      if (!k) fail(ErrorCode::InvalidLaw, "law has no variable '" + name + "'");
      if (cat >= vars_[*k].categories) fail(ErrorCode::InvalidLaw, "category out of range for '" + name + "'");
      idx.emplace_back(*k, cat);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < p_.size(); ++c) {
      bool match = true;
      for (const auto& [k, cat] : idx)
        if (category(c, k) != cat) {
          match = false;
          break;
        }
      if (match && p_[c] > 0.0) s += f(c) * p_[c];
    }
    return s;
  }

  double mass(const Cell& fixed) const {
    return sum(fixed, [](std::size_t) { return 1.0; });
  }

  /// E[Y | fixed]; throws ZeroMassCell when the event has probability zero.
  double expected_outcome(const Cell& fixed) const {
    const double m = mass(fixed);
    if (m <= 0.0) fail(ErrorCode::ZeroMassCell, "conditioning event has zero probability");
    const auto y = index_of("Y");
    if (!y) fail(ErrorCode::InvalidLaw, "law has no outcome variable 'Y'");
    return sum(fixed, [&](std::size_t c) { return static_cast<double>(category(c, *y)); }) / m;
  }

  /// P(target | fixed).
  double conditional(const Cell& target, const Cell& fixed) const {
    const double m = mass(fixed);
    if (m <= 0.0) fail(ErrorCode::ZeroMassCell, "conditioning event has zero probability");
    Cell joint = fixed;
    joint.insert(joint.end(), target.begin(), target.end());
    return mass(joint) / m;
  }

 private:
  std::vector<CategoricalVariable> vars_;
  std::vector<double> p_;
  std::vector<std::size_t> strides_;
};

namespace detail {

inline Cell condition_on(std::size_t a, std::optional<std::size_t> x) {
  Cell c{{"A", a}};
  if (x) c.emplace_back("X", *x);
  return c;
}

}  // namespace detail

/// The d_w x d_z matrix with entries P(W=w | Z=z, A=a, X=x).
inline Eigen::MatrixXd proxy_conditional_matrix(const DiscreteJointLaw& law, std::size_t a,
                                                std::optional<std::size_t> x) {
  const auto dz = law.cardinality("Z");
  const auto dw = law.cardinality("W");
  if (dz == 0 || dw == 0) fail(ErrorCode::InvalidLaw, "law needs both Z and W");
  if (x && !law.has("X")) fail(ErrorCode::InvalidLaw, "x given but law has no X");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dw), static_cast<Eigen::Index>(dz));
  for (std::size_t z = 0; z < dz; ++z) {
    Cell given = detail::condition_on(a, x);
    given.emplace_back("Z", z);
    if (law.mass(given) <= 0.0)
      fail(ErrorCode::ZeroMassCell, "P(Z=" + std::to_string(z) + ", A=" + std::to_string(a) + ") is zero");
    for (std::size_t w = 0; w < dw; ++w)
      m(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(z)) = law.conditional({{"W", w}}, given);
  }
  return m;
}

struct RankCheck {
  std::size_t rank = 0;
  bool passes = false;
  Eigen::VectorXd singular_values;
};

/// Numerical rank of P(W | Z, A=a, X=x). Passes when the rank reaches d_u if
/// the law declares U, and full rank min(d_w, d_z) otherwise.
inline RankCheck completeness_rank_check(const DiscreteJointLaw& law, std::size_t a,
                                         std::optional<std::size_t> x = std::nullopt, double tol = 1e-10) {
  Cell cond = detail::condition_on(a, x);
  if (law.mass(cond) <= 0.0) fail(ErrorCode::ZeroMassCell, "conditioning cell (a, x) has zero probability");
  const Eigen::MatrixXd m = proxy_conditional_matrix(law, a, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  RankCheck out;
  out.singular_values = svd.singularValues();
  const double cutoff = tol * out.singular_values(0);
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > cutoff) ++out.rank;
  const auto du = law.cardinality("U");
  if (du > 0)
    out.passes = out.rank >= du;
  else
    out.passes = out.rank == std::min(law.cardinality("W"), law.cardinality("Z"));
  return out;
}

}  // namespace proxcausal
