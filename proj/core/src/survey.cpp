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

#include <algorithm>
#include <cmath>

#include "pdbrw/error.hpp"
#include "pdbrw/estimators.hpp"
#include "pdbrw/numerics.hpp"
#include "pdbrw/parallel.hpp"

namespace pdbrw {

namespace {

// Running top-two, power sums and total of unnormalized weights u_j.
struct PrefixAccumulator {
  explicit PrefixAccumulator(std::size_t n) : power(n + 1) {}

  void add(double u) {
    total.add(u);
    double x = u * u;
    for (std::size_t m = 2; m < power.size(); ++m) {
      power[m].add(x);
      x *= u;
    }
    if (u > first) {
      second = first;
      first = u;
    } else if (u > second) {
      second = u;
    }
  }

  WeightDraw draw(double tail_x, std::size_t n_lineages) const {
    const double t = total.value();
    WeightDraw d;
    std::vector<double> p(power.size(), 0.0);
    p[1] = 1.0;
    double scale = t * t;
    for (std::size_t m = 2; m < power.size(); ++m) {
      p[m] = power[m].value() / scale;
      scale *= t;
    }
    d.sum_sq = p.size() > 2 ? p[2] : 0.0;
    d.tail = first / t > tail_x ? 1.0 : 0.0;
    d.second = second / t;
    d.merger = merger_probabilities_from_power_sums(p, n_lineages);
    return d;
  }

  NeumaierSum total;
  std::vector<NeumaierSum> power;
  double first = 0.0;
  double second = 0.0;
};

}  // namespace

WeightDraw summarize_weights(std::span<const double> theta, double tail_x,
                             std::size_t n_lineages) {
  PrefixAccumulator acc(std::max<std::size_t>(n_lineages, 2));
  for (double t : theta) acc.add(t);
  return acc.draw(tail_x, n_lineages);
}

std::vector<double> WeightSurvey::column(std::size_t k,
                                         double (*f)(const WeightDraw&)) const {
  std::vector<double> out(draws.at(k).size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = f(draws[k][r]);
  return out;
}

Estimate merger_at_least(std::span<const WeightDraw> draws, std::size_t m) {
  detail::require(m >= 2, "merger_at_least: m must be at least 2");
  std::vector<double> num(draws.size()), den(draws.size());
  for (std::size_t r = 0; r < draws.size(); ++r) {
    double a = 0.0, b = 0.0;
    for (std::size_t s = 2; s < draws[r].merger.size(); ++s) {
      b += draws[r].merger[s];
      if (s >= m) a += draws[r].merger[s];
    }
    num[r] = a;
    den[r] = b;
  }
  return ratio_of_means(num, den);
}

Estimate WeightSurvey::merger_at_least(std::size_t k, std::size_t m) const {
  return pdbrw::merger_at_least(draws.at(k), m);
}

WeightSurvey pd_weight_survey(const WeightSurveyConfig& config) {
  detail::require(!config.n_grid.empty(), "pd_weight_survey: empty N grid");
  detail::require(std::is_sorted(config.n_grid.begin(), config.n_grid.end()) &&
                      config.n_grid.front() >= 2,
                  "pd_weight_survey: N grid must be increasing and >= 2");
  detail::require(config.replicates >= 2, "pd_weight_survey: need at least 2 replicates");
  const PDParams params(config.alpha, config.theta);
  const std::size_t n_max = config.n_grid.back();
  const std::size_t g = config.n_grid.size();
  const std::size_t order = std::max<std::size_t>(config.n_lineages, 2);

  WeightSurvey survey;
  survey.config = config;
  survey.draws.assign(g, std::vector<WeightDraw>(config.replicates));
  parallel_for(config.replicates, [&](std::size_t r) {
    Rng rng = seed_stream(config.seed, r);
    std::vector<double> log_v(n_max);
    stick_log_weights(params, log_v, rng);
    // Weights of every prefix share one scale, so one pass serves the grid.
    const double hi = config.alpha * *std::max_element(log_v.begin(), log_v.end());
    PrefixAccumulator acc(order);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n_max; ++j) {
      acc.add(std::exp(config.alpha * log_v[j] - hi));
      while (k < g && j + 1 == config.n_grid[k]) {
        survey.draws[k][r] = acc.draw(config.tail_x, config.n_lineages);
        ++k;
      }
    }
  });
  return survey;
}

std::vector<WeightDraw> brw_weight_draws(const BRWConfig& config, std::size_t generations,
                                         std::size_t n_replicates, std::uint64_t seed,
                                         double tail_x, std::size_t n_lineages) {
  config.validate();
  detail::require(generations >= 1 && n_replicates >= 1, "brw_weight_draws: bad sizes");
  std::vector<std::vector<WeightDraw>> per(n_replicates);
  parallel_for(n_replicates, [&](std::size_t r) {
    Rng rng = seed_stream(seed, r);
    PopulationState state =
        PopulationState::from_positions(std::vector<double>(config.n_particles, 0.0));
    std::vector<double> theta(config.n_particles);
    per[r].reserve(generations);
    for (std::size_t t = 0; t < generations; ++t) {
      state = step(state, config, rng).state;
      for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] = std::exp(state.positions[i] - state.x_eq);
      per[r].push_back(summarize_weights(theta, tail_x, n_lineages));
    }
  });
  std::vector<WeightDraw> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace pdbrw
