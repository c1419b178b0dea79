#include "bkf/gibbs_linear.hpp"

#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace bkf {

void validate(const SpikeSlabPrior& prior) {
  if (!(prior.xi > 0.0 && prior.xi < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "spike-and-slab xi must lie in (0, 1)");
  }
  if (!(prior.tau2 > 0.0) || !std::isfinite(prior.tau2)) {
    throw Error(ErrorCode::InvalidParameter, "spike-and-slab tau^2 must be positive");
  }
}

SpikeSlabConditional spike_slab_conditional(double sxx, double sxz, double skk, double skz,
                                            double sigma2, const SpikeSlabPrior& prior) {
  validate(prior);
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::InvalidParameter, "sigma^2 must be positive");
  SpikeSlabConditional out;
  out.var_original = 1.0 / (1.0 / prior.tau2 + sxx / sigma2);
  out.mean_original = out.var_original * sxz / sigma2;
  out.var_knockoff = 1.0 / (1.0 / prior.tau2 + skk / sigma2);
  out.mean_knockoff = out.var_knockoff * skz / sigma2;

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double log_null = std::log(2.0 * (1.0 - prior.xi));
  if (prior.weight_form == SpikeSlabWeightForm::BayesFactor) {
    log_null += 0.5 * std::log(two_pi * prior.tau2);
  }
  const double log_orig = std::log(prior.xi) + 0.5 * std::log(two_pi * out.var_original) +
                          out.mean_original * out.mean_original / (2.0 * out.var_original);
  const double log_knock = std::log(prior.xi) + 0.5 * std::log(two_pi * out.var_knockoff) +
                           out.mean_knockoff * out.mean_knockoff / (2.0 * out.var_knockoff);
  const double top = std::max({log_null, log_orig, log_knock});
  const double w0 = std::exp(log_null - top);
  const double w1 = std::exp(log_orig - top);
  const double w2 = std::exp(log_knock - top);
  const double total = w0 + w1 + w2;
  out.p_null = w0 / total;
  out.p_original = w1 / total;
  out.p_knockoff = w2 / total;
  return out;
}

LinearChainContext make_linear_context(const KnockoffJointModel& model, const Dataset& data) {
  if (data.x.cols() != model.p()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(data.x.cols()) +
                                                  " features, model has " +
                                                  std::to_string(model.p()));
  }
  if (data.y.size() != data.x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from row count");
  }
  Matrix centered = data.x.rowwise() - model.mean().transpose();
  return {model, make_design_cache(model, centered), data.y};
}

void update_coefficients_flat(GibbsStateLinear& state, const LinearChainContext& ctx,
                              RngStream& rng, double ridge) {
  draw_coefficients_gaussian(ctx.design, state.xk, ctx.y, state.sigma2, ridge, rng, state.beta,
                             state.betak);
}

void update_coefficients_spikeslab(GibbsStateLinear& state, const LinearChainContext& ctx,
                                   const SpikeSlabPrior& prior, RngStream& rng, bool random_scan) {
  validate(prior);
  const Matrix& x = ctx.design.x;
  const Index n = x.rows();
  const Index p = x.cols();
  const auto un = static_cast<std::size_t>(n);
  const auto& k = kernels::active();

  // Column-contiguous copies for the coordinate sweep.
  const Eigen::MatrixXd xc = x;
  const Eigen::MatrixXd kc = state.xk;
  Vector r = residuals(x, state.xk, ctx.y, state.beta, state.betak);

  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  if (random_scan) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
  }

  for (const Index j : order) {
    const double* xj = xc.col(j).data();
    const double* kj = kc.col(j).data();
    if (state.beta(j) != 0.0) k.axpy(state.beta(j), xj, r.data(), un);
    if (state.betak(j) != 0.0) k.axpy(state.betak(j), kj, r.data(), un);

    const SpikeSlabConditional c =
        spike_slab_conditional(k.dot(xj, xj, un), k.dot(xj, r.data(), un), k.dot(kj, kj, un),
                               k.dot(kj, r.data(), un), state.sigma2, prior);
    const double u = rng.uniform();
    double bj = 0.0, bkj = 0.0;
    if (u < c.p_original) {
      bj = c.mean_original + std::sqrt(c.var_original) * rng.normal();
    } else if (u < c.p_original + c.p_knockoff) {
      bkj = c.mean_knockoff + std::sqrt(c.var_knockoff) * rng.normal();
    }
    state.beta(j) = bj;
    state.betak(j) = bkj;
    if (bj != 0.0) k.axpy(-bj, xj, r.data(), un);
    if (bkj != 0.0) k.axpy(-bkj, kj, r.data(), un);
  }
}

void update_sigma2(GibbsStateLinear& state, const LinearChainContext& ctx, RngStream& rng) {
  const Index n = ctx.y.size();
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "sigma^2 update needs n >= 1");
  const Vector r = residuals(ctx.design.x, state.xk, ctx.y, state.beta, state.betak);
  const double rate = std::max(0.5 * r.squaredNorm(), kRssRateFloor);
  state.sigma2 = sample_inverse_gamma(0.5 * static_cast<double>(n), rate, rng);
}

void update_knockoff_rows_linear(GibbsStateLinear& state, const LinearChainContext& ctx,
                                 RngStream& rng) {
  resample_knockoff_rows(ctx.model, ctx.design.x, ctx.design.prior_means, ctx.y, state.beta,
                         state.betak, state.sigma2, rng, state.xk);
}

GibbsStateLinear initial_state_linear(const LinearChainContext& ctx, RngStream& rng) {
  const Index p = ctx.model.p();
  const Index n = ctx.y.size();
  GibbsStateLinear state;
  state.beta = Vector::Zero(p);
  state.betak = Vector::Zero(p);
  state.sigma2 = 1.0;
  if (n >= 2) {
    const double var = (ctx.y.array() - ctx.y.mean()).square().sum() / static_cast<double>(n - 1);
    if (var > 0.0 && std::isfinite(var)) state.sigma2 = var;
  }
  state.xk = sample_knockoffs_marginal(ctx.model, ctx.design.x, rng);
  return state;
}

LinearTrace run_chain_linear(const Dataset& data, const KnockoffJointModel& model,
                             const LinearPrior& prior, const ChainConfig& config) {
  validate(config);
  if (!data.x.allFinite() || !data.y.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "dataset contains non-finite values");
  }
  const bool flat = std::holds_alternative<FlatPrior>(prior);
  if (flat && config.ridge == 0.0 && 2 * data.p() >= data.n()) {
    throw Error(ErrorCode::SingularGram,
                "flat prior needs n > 2p (n = " + std::to_string(data.n()) +
                    ", p = " + std::to_string(data.p()) +
                    "); use the spike-and-slab prior or enable ridge jitter");
  }
  if (!flat) validate(std::get<SpikeSlabPrior>(prior));

  const LinearChainContext ctx = make_linear_context(model, data);
  RngStream rng(config.seed, config.stream);
  GibbsStateLinear state = initial_state_linear(ctx, rng);

  const Index p = model.p();
  LinearTrace trace;
  trace.beta.resize(config.samples, p);
  trace.betak.resize(config.samples, p);
  trace.sigma2.resize(config.samples);
  if (config.record_delta) trace.delta.resize(config.samples);
  trace.burn_in = config.burn_in;
  trace.thin = config.thin;
  trace.seed = config.seed;
  trace.stream = config.stream;

  const long total = config.burn_in + static_cast<long>(config.samples) * config.thin;
  Index kept = 0;
  for (long it = 1; it <= total; ++it) {
    if (flat) {
      update_coefficients_flat(state, ctx, rng, config.ridge);
    } else {
      update_coefficients_spikeslab(state, ctx, std::get<SpikeSlabPrior>(prior), rng,
                                    config.random_scan);
    }
    update_sigma2(state, ctx, rng);
    update_knockoff_rows_linear(state, ctx, rng);
    state.iteration = it;

    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      trace.beta.row(kept) = state.beta.transpose();
      trace.betak.row(kept) = state.betak.transpose();
      trace.sigma2(kept) = state.sigma2;
      if (config.record_delta) trace.delta(kept) = delta_statistic(ctx.design.x, state.xk);
      if (config.knockoff_snapshot_every > 0 && kept % config.knockoff_snapshot_every == 0) {
        trace.knockoff_snapshots.push_back(state.xk);
        trace.snapshot_draws.push_back(static_cast<int>(kept));
      }
      ++kept;
    }
  }
  return trace;
}

}  // namespace bkf
