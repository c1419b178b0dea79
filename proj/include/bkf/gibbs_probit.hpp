#pragma once

#include "bkf/gibbs_common.hpp"

namespace bkf {

/// Augmented probit: y_i = 1 iff u_i > 0, u_i ~ N(x_i'beta + x~_i'betak, 1); flat prior.
struct GibbsStateProbit {
  Vector beta;
  Vector betak;
  Vector u;
  Matrix xk;
  long iteration = 0;
};

struct ProbitTrace : Trace {
  Matrix latents;  // one row per knockoff snapshot when exported
};

struct ProbitChainContext {
  const KnockoffJointModel& model;
  DesignCache design;
  Vector y;  // 0/1
};

/// Validates that y is binary.
ProbitChainContext make_probit_context(const KnockoffJointModel& model, const Dataset& data);

void update_coefficients_probit(GibbsStateProbit& state, const ProbitChainContext& ctx,
                                RngStream& rng, double ridge = 0.0);
void update_latents(GibbsStateProbit& state, const ProbitChainContext& ctx, RngStream& rng);
void update_knockoff_rows_probit(GibbsStateProbit& state, const ProbitChainContext& ctx,
                                 RngStream& rng);

GibbsStateProbit initial_state_probit(const ProbitChainContext& ctx, RngStream& rng);

// Post-burn-in draws with ||beta|| above this are reported as likely separation.
inline constexpr double kSeparationNorm = 1e3;

/// Sweep order: (beta, betak), then u, then knockoff rows.
ProbitTrace run_chain_probit(const Dataset& data, const KnockoffJointModel& model,
                             const ChainConfig& config, bool export_latents = false);

}  // namespace bkf
