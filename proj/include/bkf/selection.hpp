#pragma once

#include "bkf/types.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace bkf {

enum class FeatureStatisticKind {
  AbsDiff,      // |b| - |bk|
  SquaredDiff,  // b^2 - bk^2
  SignedSum,    // |b + bk| * sign(|b| - |bk|)
};

std::string_view to_string(FeatureStatisticKind kind) noexcept;
std::optional<FeatureStatisticKind> parse_statistic_kind(std::string_view name) noexcept;

/// Elementwise statistic; antisymmetric under swapping beta and betak.
Vector feature_statistics(const Vector& beta, const Vector& betak, FeatureStatisticKind kind);

/// Statistic for every retained draw (rows of the coefficient traces).
Matrix feature_statistics_trace(const Matrix& beta, const Matrix& betak, FeatureStatisticKind kind);

// How draws with W_j = 0 enter the null-probability bound.
enum class TieRule {
  // 1 - P(W > 0) + P(W < 0): a tie counts with weight 1/T. Equals (2/T) #{W < 0}
  // whenever the trace has no ties.
  Bound,
  // (2/T) #{W < 0}; ties contribute nothing.
  StrictNegative,
};

std::string_view to_string(TieRule rule) noexcept;
std::optional<TieRule> parse_tie_rule(std::string_view name) noexcept;

struct NullBounds {
  Vector p_hat;                      // clamped to [0, 1]
  std::vector<long> negative_count;  // #{t : W_j < 0}
  std::vector<long> zero_count;      // #{t : W_j = 0}
  long draws = 0;
};

/// w_trace is T x p with W^(t) in row t.
NullBounds estimate_null_bounds(const Matrix& w_trace, TieRule rule = TieRule::Bound);

/// Mean of p_hat over the subset (0 for the empty set).
double bfdr(const std::vector<std::size_t>& subset, const NullBounds& bounds);
double bfdr(const std::vector<std::size_t>& subset, const Vector& p_hat);

struct SelectionResult {
  std::vector<std::size_t> order;  // features by ascending p_hat, ties by index
  std::vector<double> prefix_bfdr;  // BFDR of the first j+1 features of order
  std::size_t k = 0;                // selected prefix length
  std::vector<std::size_t> selected;  // ascending feature indices
  double alpha = 0.0;
};

/// Longest prefix of the sorted order with BFDR <= alpha.
SelectionResult greedy_select(const NullBounds& bounds, double alpha);
SelectionResult greedy_select(const Vector& p_hat, double alpha);

/// statistics -> bounds -> greedy.
SelectionResult select_from_trace(const Matrix& beta, const Matrix& betak,
                                  FeatureStatisticKind kind, double alpha,
                                  TieRule rule = TieRule::Bound, NullBounds* bounds_out = nullptr);

}  // namespace bkf
