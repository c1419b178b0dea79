#include "bkf/selection.hpp"

#include "bkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bkf {

std::string_view to_string(FeatureStatisticKind kind) noexcept {
  switch (kind) {
    case FeatureStatisticKind::AbsDiff: return "abs-diff";
    case FeatureStatisticKind::SquaredDiff: return "squared-diff";
    case FeatureStatisticKind::SignedSum: return "signed-sum";
  }
  return "unknown";
}

std::optional<FeatureStatisticKind> parse_statistic_kind(std::string_view name) noexcept {
  for (auto kind : {FeatureStatisticKind::AbsDiff, FeatureStatisticKind::SquaredDiff,
                    FeatureStatisticKind::SignedSum}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(TieRule rule) noexcept {
  return rule == TieRule::Bound ? "bound" : "strict-negative";
}

std::optional<TieRule> parse_tie_rule(std::string_view name) noexcept {
  if (name == "bound") return TieRule::Bound;
  if (name == "strict-negative") return TieRule::StrictNegative;
  return std::nullopt;
}

namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline double statistic(double b, double bk, FeatureStatisticKind kind) {
  switch (kind) {
    case FeatureStatisticKind::AbsDiff: return std::abs(b) - std::abs(bk);
    case FeatureStatisticKind::SquaredDiff: return b * b - bk * bk;
    case FeatureStatisticKind::SignedSum:
      return std::abs(b + bk) * sign(std::abs(b) - std::abs(bk));
  }
  return 0.0;
}

}  // namespace

Vector feature_statistics(const Vector& beta, const Vector& betak, FeatureStatisticKind kind) {
  if (beta.size() != betak.size()) {
    throw Error(ErrorCode::DimensionMismatch, "beta and betak lengths differ");
  }
  Vector w(beta.size());
  for (Index j = 0; j < beta.size(); ++j) w(j) = statistic(beta(j), betak(j), kind);
  return w;
}

Matrix feature_statistics_trace(const Matrix& beta, const Matrix& betak,
                                FeatureStatisticKind kind) {
  if (beta.rows() != betak.rows() || beta.cols() != betak.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "beta and betak traces differ in shape");
  }
  Matrix w(beta.rows(), beta.cols());
  for (Index t = 0; t < beta.rows(); ++t)
    for (Index j = 0; j < beta.cols(); ++j) w(t, j) = statistic(beta(t, j), betak(t, j), kind);
  return w;
}

NullBounds estimate_null_bounds(const Matrix& w_trace, TieRule rule) {
  const Index draws = w_trace.rows();
  if (draws < 1) throw Error(ErrorCode::EmptyTrace, "null bounds need at least one draw");
  const Index p = w_trace.cols();
  NullBounds out;
  out.draws = draws;
  out.p_hat.resize(p);
  out.negative_count.assign(static_cast<std::size_t>(p), 0);
  out.zero_count.assign(static_cast<std::size_t>(p), 0);
  for (Index j = 0; j < p; ++j) {
    long neg = 0, zero = 0;
    for (Index t = 0; t < draws; ++t) {
      const double w = w_trace(t, j);
      if (w < 0.0) ++neg;
      else if (w == 0.0) ++zero;
    }
    out.negative_count[static_cast<std::size_t>(j)] = neg;
    out.zero_count[static_cast<std::size_t>(j)] = zero;
    const double weighted = rule == TieRule::Bound ? 2.0 * neg + zero : 2.0 * neg;
    out.p_hat(j) = std::min(1.0, weighted / static_cast<double>(draws));
  }
  return out;
}

double bfdr(const std::vector<std::size_t>& subset, const Vector& p_hat) {
  if (subset.empty()) return 0.0;
  double sum = 0.0;
  for (const std::size_t j : subset) {
    if (j >= static_cast<std::size_t>(p_hat.size())) {
      throw Error(ErrorCode::IndexOutOfRange, "feature index " + std::to_string(j) +
                                                  " out of range for p = " +
                                                  std::to_string(p_hat.size()));
    }
    sum += p_hat(static_cast<Index>(j));
  }
  return sum / static_cast<double>(subset.size());
}

double bfdr(const std::vector<std::size_t>& subset, const NullBounds& bounds) {
  return bfdr(subset, bounds.p_hat);
}

SelectionResult greedy_select(const Vector& p_hat, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must lie in the open interval (0, 1), got " +
                                             std::to_string(alpha));
  }
  const auto p = static_cast<std::size_t>(p_hat.size());
  SelectionResult out;
  out.alpha = alpha;
  out.order.resize(p);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    return p_hat(static_cast<Index>(a)) < p_hat(static_cast<Index>(b));
  });

  out.prefix_bfdr.resize(p);
  double running = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    running += p_hat(static_cast<Index>(out.order[j]));
    out.prefix_bfdr[j] = running / static_cast<double>(j + 1);
    if (out.prefix_bfdr[j] <= alpha) out.k = j + 1;
  }
  out.selected.assign(out.order.begin(), out.order.begin() + static_cast<std::ptrdiff_t>(out.k));
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

SelectionResult greedy_select(const NullBounds& bounds, double alpha) {
  return greedy_select(bounds.p_hat, alpha);
}

SelectionResult select_from_trace(const Matrix& beta, const Matrix& betak,
                                  FeatureStatisticKind kind, double alpha, TieRule rule,
                                  NullBounds* bounds_out) {
  if (beta.rows() < 1) throw Error(ErrorCode::EmptyTrace, "trace has no draws");
  NullBounds bounds = estimate_null_bounds(feature_statistics_trace(beta, betak, kind), rule);
  SelectionResult result = greedy_select(bounds, alpha);
  if (bounds_out != nullptr) *bounds_out = std::move(bounds);
  return result;
}

}  // namespace bkf
