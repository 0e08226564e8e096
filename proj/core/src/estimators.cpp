//
// Copyright 2026 The pdbrw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "pdbrw/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pdbrw/error.hpp"
#include "pdbrw/numerics.hpp"
#include "pdbrw/parallel.hpp"

namespace pdbrw {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Replicate r gets seed_stream(seed, r); values come back in index order.
std::vector<double> replicate_values(std::size_t reps, std::uint64_t seed,
                                     const std::function<double(Rng&)>& fn) {
  std::vector<double> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = seed_stream(seed, r);
    out[r] = fn(rng);
  });
  return out;
}

ParamValue beta_value(double beta) {
  if (std::isinf(beta)) return std::string("inf");
  return beta;
}

}  // namespace

EstimatorReport EstimatorReport::make(std::string name, ParamMap params, double estimate,
                                      double std_error, std::uint64_t n_samples,
                                      std::optional<double> reference,
                                      double elapsed_seconds) {
  detail::require(std_error >= 0.0 || std::isnan(std_error),
                  "EstimatorReport: negative standard error");
  EstimatorReport r;
  r.name = std::move(name);
  r.params = std::move(params);
  r.estimate = estimate;
  r.std_error = std_error;
  r.n_samples = n_samples;
  r.ci95_low = estimate - 1.96 * std_error;
  r.ci95_high = estimate + 1.96 * std_error;
  r.reference = reference;
  r.elapsed_seconds = elapsed_seconds;
  return r;
}

ScalingConstants ScalingConstants::make(const PDParams& params) {
  ScalingConstants c;
  c.alpha = params.alpha();
  c.theta = params.theta();
  const double r = c.theta / c.alpha;
  c.lambda = 1.0 + r;
  c.c_alpha_theta = reciprocal_gamma(1.0 - r) *
                    std::exp(-r * log_gamma(1.0 - c.alpha) - log_gamma(1.0 + c.theta));
  return c;
}

double ScalingConstants::L(double n) const {
  detail::require(n > 1.0, "L_N needs N > 1");
  return c_alpha_theta * std::pow(std::log(n), lambda);
}

EstimatorReport estimate_speed(const BRWConfig& config, std::size_t t_steps,
                               std::size_t n_replicates, std::uint64_t seed) {
  config.validate();
  detail::require(t_steps >= 1 && n_replicates >= 1 && t_steps * n_replicates >= 100,
                  "estimate_speed: need t_steps * n_replicates >= 100");
  const auto t0 = Clock::now();
  std::vector<RunningStats> per(n_replicates);
  parallel_for(n_replicates, [&](std::size_t r) {
    Rng rng = seed_stream(seed, r);
    PopulationState state =
        PopulationState::from_positions(std::vector<double>(config.n_particles, 0.0));
    for (std::size_t t = 0; t < t_steps; ++t) {
      StepResult s = step(state, config, rng);
      per[r].add(s.state.x_eq - state.x_eq);
      state = std::move(s.state);
    }
  });
  RunningStats pooled;
  for (const auto& s : per) pooled.merge(s);

  const double n = static_cast<double>(config.n_particles);
  std::optional<double> reference;
  if (config.n_particles >= 2)
    reference = std::log(std::log(n));
  else
    reference = single_particle_speed(config.beta);
  ParamMap params{{"n_particles", static_cast<std::int64_t>(config.n_particles)},
                  {"beta", beta_value(config.beta)},
                  {"engine", to_string(config.engine)},
                  {"variant", to_string(config.variant)},
                  {"t_steps", static_cast<std::int64_t>(t_steps)},
                  {"n_replicates", static_cast<std::int64_t>(n_replicates)}};
  if (config.engine == Engine::pd_exact)
    params["n_sticks"] = static_cast<std::int64_t>(config.sticks());
  return EstimatorReport::make("speed", std::move(params), pooled.mean(), pooled.std_error(),
                               pooled.count(), reference, seconds_since(t0));
}

std::string to_string(CnMode m) {
  return m == CnMode::semi_analytic ? "semi_analytic" : "empirical_pair";
}

CnMode parse_cn_mode(const std::string& s) {
  if (s == "semi_analytic") return CnMode::semi_analytic;
  if (s == "empirical_pair") return CnMode::empirical_pair;
  throw ParameterError("unknown c_N mode '" + s + "'");
}

EstimatorReport estimate_cn(const PDParams& params, std::size_t n_particles,
                            std::size_t n_replicates, CnMode mode, std::uint64_t seed) {
  detail::require(n_particles >= 2, "estimate_cn: need at least 2 particles");
  detail::require(n_replicates >= 2, "estimate_cn: need at least 2 replicates");
  const auto t0 = Clock::now();
  const auto values = replicate_values(n_replicates, seed, [&](Rng& rng) {
    const PDWeights w = sample_pd_weights(params, n_particles, rng);
    if (mode == CnMode::semi_analytic) return w.sum_of_squares();
    const PDWeights& ww = w;
    std::vector<double> cum(ww.theta.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < cum.size(); ++j) cum[j] = (acc += ww.theta[j]);
    auto draw = [&] {
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cum.begin(), cum.end(), u);
      return it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    };
    const std::size_t a = draw();
    const std::size_t b = draw();
    return a == b ? 1.0 : 0.0;
  });
  const Estimate e = mean_of(values);
  const ScalingConstants sc = ScalingConstants::make(params);
  std::optional<double> reference;
  if (params.theta() < params.alpha())
    reference = (1.0 - params.theta() / params.alpha()) / sc.L(static_cast<double>(n_particles));
  return EstimatorReport::make(
      "cn",
      {{"alpha", params.alpha()},
       {"theta", params.theta()},
       {"n_particles", static_cast<std::int64_t>(n_particles)},
       {"n_replicates", static_cast<std::int64_t>(n_replicates)},
       {"mode", to_string(mode)}},
      e.value, e.std_error, n_replicates, reference, seconds_since(t0));
}

double tail_reference(const PDParams& params, double x) {
  detail::require(x > 0.0 && x < 1.0, "tail_reference: x must lie in (0,1)");
  const double lambda = 1.0 + params.theta() / params.alpha();
  return std::pow((1.0 - x) / x, lambda) * reciprocal_gamma(lambda + 1.0) *
         reciprocal_gamma(2.0 - lambda);
}

std::vector<TailPoint> weight_tail_curve(const PDParams& params, std::size_t n_particles,
                                         std::span<const double> x_grid,
                                         std::size_t n_replicates, std::uint64_t seed) {
  detail::require(n_particles >= 2 && n_replicates >= 2, "weight_tail_curve: bad sizes");
  for (double x : x_grid)
    detail::require(x > 0.0 && x < 1.0, "weight_tail_curve: grid must lie in (0,1)");
  const auto top = replicate_values(n_replicates, seed, [&](Rng& rng) {
    std::vector<double> log_v(n_particles);
    stick_log_weights(params, log_v, rng);
    double hi = *std::max_element(log_v.begin(), log_v.end());
    double total = 0.0;
    for (double lv : log_v) total += std::exp(params.alpha() * (lv - hi));
    return 1.0 / total;
  });
  const double l_n = ScalingConstants::make(params).L(static_cast<double>(n_particles));
  std::vector<TailPoint> out;
  std::vector<double> ind(n_replicates);
  for (double x : x_grid) {
    for (std::size_t r = 0; r < n_replicates; ++r) ind[r] = top[r] > x ? 1.0 : 0.0;
    const Estimate e = mean_of(ind);
    out.push_back({x, l_n * e.value, l_n * e.std_error, tail_reference(params, x)});
  }
  return out;
}

std::vector<EstimatorReport> pd_diagnostics(const PDParams& params, std::size_t n_sticks,
                                            std::size_t n_replicates, std::uint64_t seed,
                                            double gamma) {
  detail::require(n_sticks >= 100, "pd_diagnostics: n_sticks must be at least 100");
  detail::require(n_replicates >= 2, "pd_diagnostics: need at least 2 replicates");
  const double alpha = params.alpha();
  const double theta = params.theta();
  const double psi = psi_alpha(alpha);
  const double phi = phi_moment(params, gamma);
  const auto t0 = Clock::now();

  std::vector<std::size_t> grid;
  for (std::size_t n = 100; n <= n_sticks; n *= 10) grid.push_back(n);
  if (grid.back() != n_sticks) grid.push_back(n_sticks);
  const std::size_t g = grid.size();

  // Per replicate: martingale moment, then (S_n - Psi log n) per grid point,
  // then Sigma_n / log n at n_sticks.
  std::vector<std::vector<double>> rows(n_replicates, std::vector<double>(g + 2));
  parallel_for(n_replicates, [&](std::size_t r) {
    Rng rng = seed_stream(seed, r);
    double log_m = 0.0, s = 0.0, sigma = 0.0;
    std::size_t next = 0;
    for (std::size_t j = 1; j <= n_sticks; ++j) {
      const double jj = static_cast<double>(j);
      const BetaDraw d = sample_beta_log(1.0 - alpha, theta + jj * alpha, rng);
      sigma += std::exp(alpha * (log_m + d.log_x));
      log_m += d.log_1mx;
      s += std::exp(alpha * d.log_x + (alpha - 1.0) * std::log(jj));
      if (j == grid[next]) {
        rows[r][1 + next] = s - psi * std::log(jj);
        ++next;
      }
    }
    const double n = static_cast<double>(n_sticks);
    rows[r][0] = gamma == 0.0 ? 1.0
                              : std::exp(gamma * ((1.0 - alpha) / alpha * std::log(n) + log_m));
    rows[r][g + 1] = sigma / std::log(n);
  });
  const double elapsed = seconds_since(t0);

  auto column = [&](std::size_t c) {
    std::vector<double> v(n_replicates);
    for (std::size_t r = 0; r < n_replicates; ++r) v[r] = rows[r][c];
    return mean_of(v);
  };
  auto base = [&](std::size_t n) {
    return ParamMap{{"alpha", alpha},
                    {"theta", theta},
                    {"n", static_cast<std::int64_t>(n)},
                    {"n_replicates", static_cast<std::int64_t>(n_replicates)}};
  };
  std::vector<EstimatorReport> out;
  {
    ParamMap p = base(n_sticks);
    p["gamma"] = gamma;
    const Estimate e = column(0);
    out.push_back(EstimatorReport::make("martingale_moment", p, e.value, e.std_error,
                                        n_replicates, phi, elapsed));
  }
  for (std::size_t k = 0; k < g; ++k) {
    const Estimate e = column(1 + k);
    out.push_back(EstimatorReport::make("series_centering", base(grid[k]), e.value,
                                        e.std_error, n_replicates, std::nullopt, elapsed));
  }
  {
    const Estimate e = column(g + 1);
    std::optional<double> ref;
    if (theta == 0.0) ref = mittag_leffler_moment(alpha, 1.0);
    out.push_back(EstimatorReport::make("sigma_growth", base(n_sticks), e.value, e.std_error,
                                        n_replicates, ref, elapsed));
  }
  return out;
}

std::size_t first_merger_size(const CoalescentTrajectory& tr) {
  for (std::size_t t = 1; t < tr.states.size(); ++t) {
    const Partition& a = tr.states[t - 1];
    const Partition& b = tr.states[t];
    if (b.block_count() >= a.block_count()) continue;
    // Count a-blocks landing in each b-block.
    std::vector<std::size_t> seen(a.block_count(), 0);
    std::vector<std::size_t> groups(b.block_count(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (seen[a.block_of(i)]++ == 0) ++groups[b.block_of(i)];
    }
    return *std::max_element(groups.begin(), groups.end());
  }
  return 0;
}

MergerStatistics merger_statistics(std::span<const CoalescentTrajectory> trajectories,
                                   std::size_t n_lineages, const LambdaMeasure* reference) {
  detail::require(n_lineages >= 2, "merger_statistics: need at least 2 lineages");
  MergerStatistics st;
  st.n_lineages = n_lineages;
  st.n_trajectories = trajectories.size();
  st.counts.assign(n_lineages + 1, 0.0);
  for (const auto& tr : trajectories) {
    detail::require(!tr.states.empty() && tr.states.front().size() == n_lineages,
                    "merger_statistics: trajectory has the wrong lineage count");
    const std::size_t k = first_merger_size(tr);
    if (k == 0)
      ++st.no_merger;
    else
      st.counts[k] += 1.0;
  }
  const double merged = static_cast<double>(st.n_trajectories - st.no_merger);
  st.frequencies.assign(n_lineages + 1, 0.0);
  if (merged > 0)
    for (std::size_t k = 2; k <= n_lineages; ++k) st.frequencies[k] = st.counts[k] / merged;
  if (reference) {
    st.reference = first_merger_distribution(n_lineages, *reference);
    st.chi2 = chi_square(std::span(st.counts).subspan(2), std::span(st.reference).subspan(2));
  }
  return st;
}

}  // namespace pdbrw
