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

#include "pdbrw/brw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "pdbrw/distributions.hpp"
#include "pdbrw/error.hpp"
#include "pdbrw/numerics.hpp"

namespace pdbrw {

std::string to_string(Engine e) {
  switch (e) {
    case Engine::direct: return "direct";
    case Engine::pd_exact: return "pd_exact";
    case Engine::exponential_model: return "exponential_model";
  }
  return "?";
}

std::string to_string(Variant v) {
  return v == Variant::standard ? "standard" : "drop_first_sampled";
}

Engine parse_engine(const std::string& s) {
  if (s == "direct") return Engine::direct;
  if (s == "pd_exact") return Engine::pd_exact;
  if (s == "exponential_model") return Engine::exponential_model;
  throw ParameterError("unknown engine '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "drop_first_sampled") return Variant::drop_first_sampled;
  throw ParameterError("unknown variant '" + s + "'");
}

void BRWConfig::validate() const {
  detail::require(n_particles >= 1, "n_particles must be positive");
  detail::require(n_particles < (1ULL << 31), "n_particles too large");
  detail::require(beta > 1.0, "beta must exceed 1 (or be infinite)");
  const bool inf = std::isinf(beta);
  detail::require((engine == Engine::exponential_model) == inf,
                  "engine exponential_model is used exactly when beta is infinite");
  detail::require(truncation_epsilon > 0.0 && std::isfinite(truncation_epsilon),
                  "truncation_epsilon must be positive");
  detail::require(max_points > 0.0, "max_points must be positive");
  if (engine == Engine::pd_exact)
    detail::require(sticks() >= n_sampled(), "n_sticks must be at least N");
}

std::size_t BRWConfig::sticks() const {
  return n_sticks != 0 ? n_sticks : std::max<std::size_t>(n_particles, 10000);
}

std::size_t BRWConfig::n_sampled() const {
  return n_particles + (variant == Variant::drop_first_sampled ? 1 : 0);
}

PopulationState PopulationState::from_positions(std::vector<double> positions,
                                                std::uint64_t generation) {
  detail::require(!positions.empty(), "population must be nonempty");
  PopulationState s;
  s.x_eq = log_sum_exp(positions);
  s.positions = std::move(positions);
  s.generation = generation;
  return s;
}

void GenealogyRecord::append(std::span<const std::uint32_t> parents) {
  detail::require(parents.size() == n_, "genealogy: wrong parent count");
  for (auto p : parents) detail::require(p < n_, "genealogy: parent label out of range");
  labels_.insert(labels_.end(), parents.begin(), parents.end());
}

std::span<const std::uint32_t> GenealogyRecord::parents(std::size_t t) const {
  detail::require(t >= 1 && t <= generations(), "genealogy: generation out of range");
  return std::span<const std::uint32_t>(labels_).subspan((t - 1) * n_, n_);
}

namespace {

std::shared_ptr<const AliasTable> mark_law(const PopulationState& state) {
  std::vector<double> lw(state.positions.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = state.positions[i] - state.x_eq;
  return std::make_shared<const AliasTable>(lw);
}

void extend_weights(std::vector<double>& w, std::span<const double> rel, double beta) {
  const std::size_t from = w.size();
  w.resize(rel.size());
  for (std::size_t i = from; i < rel.size(); ++i) w[i] = std::exp(beta * rel[i]);
}

double retained(std::span<const double> w) {
  NeumaierSum acc;
  for (double x : w) acc.add(x);
  return acc.value();
}

ChildPointsSample branch(const PopulationState& state, const BRWConfig& config, Rng& rng,
                         bool certify_total_weight, bool with_marks) {
  config.validate();
  detail::require(config.engine == Engine::direct && std::isfinite(config.beta),
                  "branch_direct needs the direct engine with finite beta");
  detail::require(state.size() == config.n_particles,
                  "population size does not match n_particles");
  const double beta = config.beta;
  const std::size_t k = 2 * config.n_sampled() + 64;

  PPPSample ppp = sample_ppp_top_k(k, rng);
  std::vector<double>& rel = ppp.points;
  double cutoff = ppp.cutoff;
  std::vector<double> w;
  extend_weights(w, rel, beta);
  double weight = retained(w);

  if (certify_total_weight) {
    int rounds = 0;
    while (tail_weight_bound(cutoff, beta) > config.truncation_epsilon * weight) {
      if (++rounds > 8)
        throw ResourceError("tail weight not certified after 8 refinements");
      // Aim at half the tolerance so an empty band cannot stall on rounding.
      const double target = 0.5 * config.truncation_epsilon * weight * (beta - 1.0);
      const double lower = std::log(target) / (beta - 1.0);
      if (std::exp(-lower) > config.max_points)
        throw ResourceError("truncation epsilon " +
                            std::to_string(config.truncation_epsilon) +
                            " needs more than max_points child atoms; use a larger epsilon");
      PPPSample band = sample_ppp_band(lower, cutoff, rng, config.max_points);
      rel.insert(rel.end(), band.points.begin(), band.points.end());
      cutoff = lower;
      extend_weights(w, rel, beta);
      weight = retained(w);
    }
  }

  ChildPointsSample out;
  out.origin = state.x_eq;
  out.mark_law = mark_law(state);
  out.cutoff = state.x_eq + cutoff;
  out.relative_cutoff = cutoff;
  out.tail_weight_bound = tail_weight_bound(cutoff, beta);
  out.retained_weight = weight;
  out.points.resize(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) out.points[i] = state.x_eq + rel[i];
  if (with_marks) {
    out.parent_marks.resize(rel.size());
    for (auto& m : out.parent_marks) m = out.mark_law->sample(rng);
  }
  out.relative = std::move(rel);
  out.weight = std::move(w);
  return out;
}

}  // namespace

ChildPointsSample branch_direct(const PopulationState& state,
                                const BRWConfig& config, Rng& rng,
                                bool certify_total_weight) {
  return branch(state, config, rng, certify_total_weight, true);
}

std::vector<std::size_t> select_weighted_without_replacement(
    ChildPointsSample& children, std::size_t n_select, double beta, Rng& rng) {
  detail::require(beta > 1.0 && std::isfinite(beta),
                  "select_weighted_without_replacement: beta must be finite and > 1");
  detail::require(n_select >= 1, "n_select must be positive");
  const std::size_t n = children.relative.size();
  const double tail_rate = children.tail_weight_bound;
  if (n < n_select && !(tail_rate > 0.0))
    throw InternalError("fewer retained children than selections");

  // Exponential race: key_i = E_i e^{-beta x_i}; ascending keys are a
  // sequential e^{beta x}-weighted draw without replacement.
  if (children.weight.size() != n) {
    children.weight.clear();
    extend_weights(children.weight, children.relative, beta);
  }
  const bool marked = children.parent_marks.size() == n;
  struct Keyed {
    double key;
    std::size_t index;
    bool operator<(const Keyed& o) const {
      return key < o.key || (key == o.key && index < o.index);
    }
  };
  std::vector<Keyed> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = children.weight[i];
    order[i] = {w > 0.0 ? rng.exponential() / w : std::numeric_limits<double>::infinity(), i};
  }
  const std::size_t head = std::min(n, n_select);
  if (head < n) std::nth_element(order.begin(), order.begin() + head, order.end());
  order.resize(head);
  std::sort(order.begin(), order.end());

  // Atoms below the cutoff, generated in key order by thinning: proposals
  // arrive at rate tail_rate in key space with position c - Exp/(beta-1),
  // accepted with probability exp(-key * e^{beta x}).
  const double c = children.relative_cutoff;
  double s = 0.0;
  double next_key = std::numeric_limits<double>::infinity();
  double next_x = 0.0;
  auto advance_tail = [&] {
    if (!(tail_rate > 0.0)) return;
    for (;;) {
      s += rng.exponential() / tail_rate;
      const double x = c - rng.exponential() / (beta - 1.0);
      if (rng.exponential() > s * std::exp(beta * x)) {
        next_key = s;
        next_x = x;
        return;
      }
    }
  };
  advance_tail();

  struct TailPick {
    double x;
    std::size_t slot;
  };
  std::vector<TailPick> tail;
  std::vector<std::size_t> picked;
  picked.reserve(n_select);
  std::size_t i = 0;
  while (picked.size() < n_select) {
    if (i < order.size() && order[i].key <= next_key) {
      picked.push_back(order[i++].index);
    } else {
      if (std::isinf(next_key))
        throw InternalError("fewer retained children than selections");
      tail.push_back({next_x, picked.size()});
      picked.push_back(0);
      advance_tail();
    }
  }

  if (!tail.empty()) {
    std::vector<std::size_t> rank(tail.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(),
              [&](std::size_t a, std::size_t b) { return tail[a].x > tail[b].x; });
    for (std::size_t r : rank) {
      const std::size_t idx = children.relative.size();
      children.relative.push_back(tail[r].x);
      children.points.push_back(children.origin + tail[r].x);
      children.weight.push_back(std::exp(beta * tail[r].x));
      if (marked) children.parent_marks.push_back(children.mark_law->sample(rng));
      picked[tail[r].slot] = idx;
    }
  }
  return picked;
}

namespace {

StepResult finish_step(const PopulationState& state, const BRWConfig& config,
                       std::vector<double> sampled,
                       std::vector<std::uint32_t> parents) {
  StepResult r;
  if (config.variant == Variant::drop_first_sampled) {
    r.dropped_position = sampled.front();
    r.dropped_parent = parents.front();
    sampled.erase(sampled.begin());
    parents.erase(parents.begin());
  }
  r.state = PopulationState::from_positions(std::move(sampled), state.generation + 1);
  r.parents = std::move(parents);
  return r;
}

}  // namespace

StepResult step_direct(const PopulationState& state, const BRWConfig& config,
                       Rng& rng) {
  ChildPointsSample children = branch(state, config, rng, false, false);
  const std::vector<std::size_t> idx =
      select_weighted_without_replacement(children, config.n_sampled(), config.beta, rng);
  std::vector<double> pos(idx.size());
  std::vector<std::uint32_t> parents(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    pos[i] = children.origin + children.relative[idx[i]];
    parents[i] = children.mark_law->sample(rng);
  }
  return finish_step(state, config, std::move(pos), std::move(parents));
}

StepResult step_pd_exact(const PopulationState& state, const BRWConfig& config,
                         Rng& rng) {
  config.validate();
  detail::require(config.engine == Engine::pd_exact, "step_pd_exact needs engine pd_exact");
  detail::require(state.size() == config.n_particles,
                  "population size does not match n_particles");
  const double beta = config.beta;
  const double alpha = 1.0 / beta;
  const std::size_t n = config.sticks();
  std::vector<double> log_v(n);
  const double log_m = stick_log_weights(PDParams(alpha, 0.0), log_v, rng);
  const double log_l = -std::log(psi_alpha(alpha)) / alpha -
                       (1.0 - alpha) / alpha * std::log(static_cast<double>(n)) - log_m;

  const auto law = mark_law(state);
  const std::size_t k = config.n_sampled();
  std::vector<double> pos(k);
  std::vector<std::uint32_t> parents(k);
  for (std::size_t j = 0; j < k; ++j) {
    pos[j] = state.x_eq + (log_v[j] + log_l) / beta;
    parents[j] = law->sample(rng);
  }
  return finish_step(state, config, std::move(pos), std::move(parents));
}

ExponentialModelSample sample_exponential_model_points(std::size_t n, Rng& rng) {
  detail::require(n >= 1, "sample_exponential_model_points: n must be positive");
  ExponentialModelSample s;
  s.e.resize(n);
  for (double& e : s.e) e = rng.exponential();
  s.z = -sample_log_gamma(static_cast<double>(n) + 1.0, rng);
  return s;
}

std::vector<double> ExponentialModelSample::ranked() const {
  std::vector<double> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = z + e[i];
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

StepResult step_exponential_model(const PopulationState& state,
                                  const BRWConfig& config, Rng& rng) {
  config.validate();
  detail::require(std::isinf(config.beta), "step_exponential_model needs beta = inf");
  detail::require(state.size() == config.n_particles,
                  "population size does not match n_particles");
  const std::size_t k = config.n_sampled();
  std::vector<double> pos = sample_exponential_model_points(k, rng).ranked();
  const auto law = mark_law(state);
  std::vector<std::uint32_t> parents(k);
  for (std::size_t j = 0; j < k; ++j) {
    pos[j] += state.x_eq;
    parents[j] = law->sample(rng);
  }
  return finish_step(state, config, std::move(pos), std::move(parents));
}

StepResult step(const PopulationState& state, const BRWConfig& config, Rng& rng) {
  switch (config.engine) {
    case Engine::direct: return step_direct(state, config, rng);
    case Engine::pd_exact: return step_pd_exact(state, config, rng);
    case Engine::exponential_model: return step_exponential_model(state, config, rng);
  }
  throw InternalError("unknown engine");
}

double first_selected_normalized_weight(const BRWConfig& config, Rng& rng) {
  const PopulationState state = PopulationState::from_positions(
      std::vector<double>(config.n_particles, 0.0));
  ChildPointsSample children = branch_direct(state, config, rng, true);
  const double total = children.retained_weight + children.tail_weight_bound;
  const std::size_t first =
      select_weighted_without_replacement(children, 1, config.beta, rng).front();
  return std::exp(config.beta * children.relative[first]) / total;
}

double pd_exact_log_l_bias(double alpha, std::size_t n_sticks) {
  detail::require(alpha > 0.0 && alpha < 1.0 && n_sticks >= 1,
                  "pd_exact_log_l_bias: bad arguments");
  // E log M_n = sum_i E log(1 - Y_i), Y_i ~ Beta(1 - alpha, i alpha).
  NeumaierSum e_log_m;
  for (std::size_t i = 1; i <= n_sticks; ++i) {
    const double b = static_cast<double>(i) * alpha;
    e_log_m.add(digamma(b) - digamma(b + 1.0 - alpha));
  }
  const double e_log_m_inf =
      std::log(alpha) + digamma(1.0) / alpha - digamma(1.0);
  return -(1.0 - alpha) / alpha * std::log(static_cast<double>(n_sticks)) -
         e_log_m.value() + e_log_m_inf;
}

double single_particle_speed(double beta) {
  detail::require(beta > 1.0, "single_particle_speed: beta must exceed 1");
  if (std::isinf(beta)) return std::numbers::egamma;
  const double alpha = 1.0 / beta;
  return alpha * digamma(1.0 - alpha) + std::numbers::egamma + log_gamma(1.0 - alpha);
}

std::vector<double> RunResult::increments() const {
  std::vector<double> out;
  for (std::size_t t = 1; t < trajectory.size(); ++t)
    out.push_back(trajectory[t].x_eq - trajectory[t - 1].x_eq);
  return out;
}

namespace {

GenerationSummary summarize(const PopulationState& s) {
  const auto [lo, hi] = std::minmax_element(s.positions.begin(), s.positions.end());
  return {s.generation, s.x_eq, *hi, *lo};
}

}  // namespace

RunResult run(const BRWConfig& config, std::size_t horizon, Rng& rng,
              const RunOptions& options) {
  config.validate();
  detail::require(horizon >= 1, "run: horizon must be positive");
  std::vector<double> init = options.initial_positions;
  if (init.empty()) init.assign(config.n_particles, 0.0);
  detail::require(init.size() == config.n_particles,
                  "initial positions must have N entries");

  RunResult out;
  out.genealogy = GenealogyRecord(config.n_particles);
  PopulationState state = PopulationState::from_positions(std::move(init));
  out.trajectory.reserve(horizon + 1);
  out.trajectory.push_back(summarize(state));
  if (options.keep_states) out.states.push_back(state);
  for (std::size_t t = 0; t < horizon; ++t) {
    StepResult r = step(state, config, rng);
    if (options.record_genealogy) out.genealogy.append(r.parents);
    out.trajectory.push_back(summarize(r.state));
    if (options.keep_states) out.states.push_back(r.state);
    state = std::move(r.state);
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace pdbrw
