#include "bkf/gibbs_probit.hpp"

#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <string>

namespace bkf {

ProbitChainContext make_probit_context(const KnockoffJointModel& model, const Dataset& data) {
  if (data.x.cols() != model.p()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(data.x.cols()) +
                                                  " features, model has " +
                                                  std::to_string(model.p()));
  }
  if (data.y.size() != data.x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from row count");
  }
  for (Index i = 0; i < data.y.size(); ++i) {
    if (data.y(i) != 0.0 && data.y(i) != 1.0) {
      throw Error(ErrorCode::ParseError, "probit response must be 0/1, row " + std::to_string(i) +
                                             " has " + std::to_string(data.y(i)));
    }
  }
  Matrix centered = data.x.rowwise() - model.mean().transpose();
  return {model, make_design_cache(model, centered), data.y};
}

void update_coefficients_probit(GibbsStateProbit& state, const ProbitChainContext& ctx,
                                RngStream& rng, double ridge) {
  draw_coefficients_gaussian(ctx.design, state.xk, state.u, 1.0, ridge, rng, state.beta,
                             state.betak);
}

void update_latents(GibbsStateProbit& state, const ProbitChainContext& ctx, RngStream& rng) {
  const Matrix& x = ctx.design.x;
  const auto& k = kernels::active();
  const auto p = static_cast<std::size_t>(x.cols());
  state.u.resize(ctx.y.size());
  for (Index i = 0; i < ctx.y.size(); ++i) {
    const double eta = k.dot(x.row(i).data(), state.beta.data(), p) +
                       k.dot(state.xk.row(i).data(), state.betak.data(), p);
    state.u(i) = ctx.y(i) == 1.0 ? sample_truncated_normal(eta, 0.0, kInf, rng)
                                 : sample_truncated_normal(eta, -kInf, 0.0, rng);
  }
}

void update_knockoff_rows_probit(GibbsStateProbit& state, const ProbitChainContext& ctx,
                                 RngStream& rng) {
  resample_knockoff_rows(ctx.model, ctx.design.x, ctx.design.prior_means, state.u, state.beta,
                         state.betak, 1.0, rng, state.xk);
}

GibbsStateProbit initial_state_probit(const ProbitChainContext& ctx, RngStream& rng) {
  const Index p = ctx.model.p();
  GibbsStateProbit state;
  state.beta = Vector::Zero(p);
  state.betak = Vector::Zero(p);
  state.xk = sample_knockoffs_marginal(ctx.model, ctx.design.x, rng);
  update_latents(state, ctx, rng);
  return state;
}

ProbitTrace run_chain_probit(const Dataset& data, const KnockoffJointModel& model,
                             const ChainConfig& config, bool export_latents) {
  validate(config);
  if (!data.x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "features contain non-finite values");
  if (config.ridge == 0.0 && 2 * data.p() >= data.n()) {
    throw Error(ErrorCode::SingularGram,
                "flat-prior probit needs n > 2p (n = " + std::to_string(data.n()) +
                    ", p = " + std::to_string(data.p()) + "); enable ridge jitter");
  }
  const ProbitChainContext ctx = make_probit_context(model, data);
  RngStream rng(config.seed, config.stream);
  GibbsStateProbit state = initial_state_probit(ctx, rng);

  const Index p = model.p();
  ProbitTrace trace;
  trace.beta.resize(config.samples, p);
  trace.betak.resize(config.samples, p);
  if (config.record_delta) trace.delta.resize(config.samples);
  trace.burn_in = config.burn_in;
  trace.thin = config.thin;
  trace.seed = config.seed;
  trace.stream = config.stream;

  const double ones = ctx.y.sum();
  if (ones == 0.0 || ones == static_cast<double>(ctx.y.size())) {
    trace.warnings.push_back(
        "response is constant; flat-prior probit coefficients are not identified and will drift");
  }

  std::vector<Vector> latent_rows;
  bool separation = false;
  const long total = config.burn_in + static_cast<long>(config.samples) * config.thin;
  Index kept = 0;
  for (long it = 1; it <= total; ++it) {
    update_coefficients_probit(state, ctx, rng, config.ridge);
    update_latents(state, ctx, rng);
    update_knockoff_rows_probit(state, ctx, rng);
    state.iteration = it;

    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      trace.beta.row(kept) = state.beta.transpose();
      trace.betak.row(kept) = state.betak.transpose();
      if (config.record_delta) trace.delta(kept) = delta_statistic(ctx.design.x, state.xk);
      if (!separation && state.beta.norm() > kSeparationNorm) separation = true;
      const bool snapshot =
          config.knockoff_snapshot_every > 0 && kept % config.knockoff_snapshot_every == 0;
      if (snapshot) {
        trace.knockoff_snapshots.push_back(state.xk);
        trace.snapshot_draws.push_back(static_cast<int>(kept));
      }
      if (export_latents && (snapshot || config.knockoff_snapshot_every == 0)) {
        latent_rows.push_back(state.u);
      }
      ++kept;
    }
  }
  if (separation) {
    trace.warnings.push_back("coefficient norm exceeded 1e3 after burn-in; possible separation");
  }
  if (!latent_rows.empty()) {
    trace.latents.resize(static_cast<Index>(latent_rows.size()), ctx.y.size());
    for (std::size_t t = 0; t < latent_rows.size(); ++t) {
      trace.latents.row(static_cast<Index>(t)) = latent_rows[t].transpose();
    }
  }
  return trace;
}

}  // namespace bkf
