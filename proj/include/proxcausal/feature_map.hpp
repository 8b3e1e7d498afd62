#pragma once

// Maps a variable history B(0..j), one n x d block per period, to a fixed
// number of feature columns.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proxcausal/errors.hpp"

namespace proxcausal {

struct FeatureMap {
  enum class Kind { cum, last, concat, full_with_interaction, custom };
  Kind kind = Kind::cum;
  /// Used when kind == custom.
  std::function<Eigen::MatrixXd(const std::vector<Eigen::MatrixXd>&)> fn;
  std::string label;

  static FeatureMap cum() { return {Kind::cum, {}, "cum"}; }
  static FeatureMap last() { return {Kind::last, {}, "last"}; }
  static FeatureMap concat() { return {Kind::concat, {}, "concat"}; }
  static FeatureMap full_with_interaction() { return {Kind::full_with_interaction, {}, "full_with_interaction"}; }
  static FeatureMap custom(std::function<Eigen::MatrixXd(const std::vector<Eigen::MatrixXd>&)> f, std::string label) {
    return {Kind::custom, std::move(f), std::move(label)};
  }

  /// True when the features are a linear function of the history.
  bool is_linear() const { return kind == Kind::cum || kind == Kind::last || kind == Kind::concat; }

  std::string name() const { return label.empty() ? std::string("custom") : label; }

  Eigen::MatrixXd apply(const std::vector<Eigen::MatrixXd>& history) const {
    if (history.empty()) return {};
    const auto n = history.front().rows();
    const auto d = history.front().cols();
    for (const auto& b : history)
      if (b.rows() != n || b.cols() != d) fail(ErrorCode::DimensionMismatch, "feature map: ragged history");
    switch (kind) {
      case Kind::cum: {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, d);
        for (const auto& b : history) s += b;
        return s;
      }
      case Kind::last:
        return history.back();
      case Kind::concat: {
        Eigen::MatrixXd out(n, d * static_cast<Eigen::Index>(history.size()));
        for (std::size_t j = 0; j < history.size(); ++j) out.middleCols(static_cast<Eigen::Index>(j) * d, d) = history[j];
        return out;
      }
      case Kind::full_with_interaction: {
        // per entry: products over every nonempty subset of periods, ordered
        // by subset size then lexicographically (A0, A1, A0*A1 for J = 2)
        const auto J = history.size();
        if (J > 12) fail(ErrorCode::InvalidArgument, "full_with_interaction supports at most 12 periods");
        std::vector<std::vector<std::size_t>> subsets;
        for (std::size_t size = 1; size <= J; ++size) {
          std::vector<std::size_t> pick(size);
          for (std::size_t k = 0; k < size; ++k) pick[k] = k;
          while (true) {
            subsets.push_back(pick);
            std::size_t pos = size;
            while (pos > 0 && pick[pos - 1] == J - size + pos - 1) --pos;
            if (pos == 0) break;
            ++pick[pos - 1];
            for (std::size_t k = pos; k < size; ++k) pick[k] = pick[k - 1] + 1;
          }
        }
        Eigen::MatrixXd out(n, d * static_cast<Eigen::Index>(subsets.size()));
        Eigen::Index c = 0;
        for (Eigen::Index e = 0; e < d; ++e)
          for (const auto& s : subsets) {
            Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
            for (auto j : s) v = v.cwiseProduct(history[j].col(e));
            out.col(c++) = v;
          }
        return out;
      }
      case Kind::custom:
        if (!fn) fail(ErrorCode::InvalidArgument, "custom feature map without a function");
        return fn(history);
    }
    return {};
  }

  /// Features of a single regime: each period value broadcast to one row.
  Eigen::RowVectorXd apply_regime(const std::vector<double>& regime) const {
    std::vector<Eigen::MatrixXd> h;
    for (double a : regime) h.push_back(Eigen::MatrixXd::Constant(1, 1, a));
    return apply(h).row(0);
  }
};

inline FeatureMap feature_map_from_name(const std::string& s) {
  if (s == "cum") return FeatureMap::cum();
  if (s == "last") return FeatureMap::last();
  if (s == "concat") return FeatureMap::concat();
  if (s == "full_with_interaction") return FeatureMap::full_with_interaction();
  fail(ErrorCode::InvalidArgument, "unknown feature map '" + s + "'");
}

}  // namespace proxcausal
