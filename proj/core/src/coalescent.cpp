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

#include "pdbrw/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pdbrw/error.hpp"
#include "pdbrw/numerics.hpp"

namespace pdbrw {

Partition Partition::singletons(std::size_t n) {
  Partition p;
  p.labels_.resize(n);
  std::iota(p.labels_.begin(), p.labels_.end(), 0u);
  p.n_blocks_ = n;
  return p;
}

Partition Partition::from_labels(std::span<const std::uint32_t> labels) {
  Partition p;
  p.labels_.resize(labels.size());
  std::unordered_map<std::uint32_t, std::uint32_t> rank;
  rank.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = rank.try_emplace(labels[i], static_cast<std::uint32_t>(rank.size()));
    p.labels_[i] = it->second;
  }
  p.n_blocks_ = rank.size();
  return p;
}

Partition Partition::from_blocks(const std::vector<std::vector<std::uint32_t>>& blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> labels(n, kUnset);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    detail::require(!blocks[j].empty(), "Partition: empty block");
    for (auto e : blocks[j]) {
      detail::require(e < n, "Partition: element out of range");
      detail::require(labels[e] == kUnset, "Partition: blocks overlap");
      labels[e] = static_cast<std::uint32_t>(j);
    }
  }
  return from_labels(labels);
}

Partition Partition::from_string(const std::string& text) {
  std::vector<std::vector<std::uint32_t>> blocks;
  std::stringstream ss(text);
  std::string block;
  while (std::getline(ss, block, '|')) {
    std::stringstream bs(block);
    std::vector<std::uint32_t> b;
    long long e;
    while (bs >> e) {
      detail::require(e >= 1, "Partition: elements are 1-based");
      b.push_back(static_cast<std::uint32_t>(e - 1));
    }
    detail::require(bs.eof(), "Partition: malformed block '" + block + "'");
    blocks.push_back(std::move(b));
  }
  return from_blocks(blocks);
}

std::vector<std::vector<std::uint32_t>> Partition::blocks() const {
  std::vector<std::vector<std::uint32_t>> out(n_blocks_);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    out[labels_[i]].push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::size_t Partition::largest_block() const {
  std::vector<std::size_t> sizes(n_blocks_, 0);
  for (auto l : labels_) ++sizes[l];
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

std::string Partition::to_string() const {
  std::string out;
  const auto bl = blocks();
  for (std::size_t j = 0; j < bl.size(); ++j) {
    if (j) out += '|';
    for (std::size_t i = 0; i < bl[j].size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(bl[j][i] + 1);
    }
  }
  return out;
}

Partition coag(const Partition& pi, const Partition& pi_prime) {
  detail::require(pi_prime.size() >= pi.block_count(),
                  "coag: pi_prime must cover every block index of pi");
  std::vector<std::uint32_t> labels(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i)
    labels[i] = pi_prime.block_of(pi.block_of(i));
  return Partition::from_labels(labels);
}

Partition restrict(const Partition& pi, std::size_t m) {
  detail::require(m <= pi.size(), "restrict: m exceeds partition size");
  return Partition::from_labels(std::span(pi.labels()).first(m));
}

LambdaMeasure LambdaMeasure::beta_family(double lambda) {
  detail::require(lambda > 0.0 && lambda < 2.0, "beta_family: lambda must lie in (0,2)");
  LambdaMeasure m;
  m.kind_ = Kind::beta_family;
  m.lambda_ = lambda;
  m.mass_ = 1.0;
  return m;
}

LambdaMeasure LambdaMeasure::kingman() { return LambdaMeasure(); }

LambdaMeasure LambdaMeasure::general(std::function<double(double)> density,
                                     double total_mass) {
  detail::require(static_cast<bool>(density), "general measure needs a density");
  detail::require(total_mass > 0.0, "general measure needs positive mass");
  LambdaMeasure m;
  m.kind_ = Kind::general;
  m.mass_ = total_mass;
  m.density_ = std::move(density);
  return m;
}

double LambdaMeasure::density(double x) const {
  switch (kind_) {
    case Kind::beta_family: {
      const double l = lambda_;
      return std::exp((1.0 - l) * std::log(x) + (l - 1.0) * std::log1p(-x) -
                      log_gamma(l) - log_gamma(2.0 - l));
    }
    case Kind::general: return density_(x);
    case Kind::kingman_dirac0: break;
  }
  throw ParameterError("Kingman measure has no density");
}

namespace {

void check_bk(std::size_t b, std::size_t k) {
  detail::require(b >= 2 && k >= 2 && k <= b, "rate index needs 2 <= k <= b");
}

double log_choose(std::size_t n, std::size_t k) {
  return log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(k) + 1.0) -
         log_gamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double lambda_rate(std::size_t b, std::size_t k, const LambdaMeasure& measure) {
  check_bk(b, k);
  switch (measure.kind()) {
    case LambdaMeasure::Kind::beta_family: {
      const double l = measure.lambda();
      const double bb = static_cast<double>(b), kk = static_cast<double>(k);
      return std::exp(log_beta(kk - l, bb - kk + l) - log_beta(2.0 - l, l));
    }
    case LambdaMeasure::Kind::kingman_dirac0: return k == 2 ? 1.0 : 0.0;
    case LambdaMeasure::Kind::general: return lambda_rate_quadrature(b, k, measure);
  }
  throw InternalError("unknown measure kind");
}

double lambda_rate_quadrature(std::size_t b, std::size_t k, const LambdaMeasure& measure) {
  check_bk(b, k);
  detail::require(measure.kind() != LambdaMeasure::Kind::kingman_dirac0,
                  "quadrature needs a measure with a density");
  const double p = static_cast<double>(k) - 2.0;
  const double q = static_cast<double>(b - k);
  // Split at 1/2 and reflect the right half so that 1 - x is exact near 1,
  // where the Beta density may be singular.
  const bool beta = measure.kind() == LambdaMeasure::Kind::beta_family;
  const double l = measure.lambda();
  const double log_norm = beta ? log_gamma(l) + log_gamma(2.0 - l) : 0.0;
  auto g = [&](double x, double one_minus) {
    double v = beta ? std::exp((1.0 - l) * std::log(x) + (l - 1.0) * std::log(one_minus) -
                               log_norm)
                    : measure.density(x);
    if (p > 0.0) v *= std::pow(x, p);
    if (q > 0.0) v *= std::pow(one_minus, q);
    return v;
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double left = integrator.integrate([&](double x) { return g(x, 1.0 - x); }, 0.0, 0.5, 1e-14);
  const double right = integrator.integrate([&](double y) { return g(1.0 - y, y); }, 0.0, 0.5, 1e-14);
  return left + right;
}

RateTable::RateTable(std::size_t b_max, const LambdaMeasure& measure) : b_max_(b_max) {
  detail::require(b_max >= 2, "RateTable: b_max must be at least 2");
  rates_.assign((b_max + 1) * (b_max + 1), 0.0);
  for (std::size_t b = 2; b <= b_max; ++b)
    for (std::size_t k = 2; k <= b; ++k) rates_[b * (b_max + 1) + k] = lambda_rate(b, k, measure);
}

double RateTable::rate(std::size_t b, std::size_t k) const {
  check_bk(b, k);
  detail::require(b <= b_max_, "RateTable: b beyond b_max");
  return rates_[b * (b_max_ + 1) + k];
}

double RateTable::max_recursion_error() const {
  double worst = 0.0;
  for (std::size_t b = 2; b < b_max_; ++b) {
    for (std::size_t k = 2; k <= b; ++k) {
      const double lhs = rate(b, k);
      const double rhs = rate(b + 1, k) + rate(b + 1, k + 1);
      if (lhs == 0.0 && rhs == 0.0) continue;
      worst = std::max(worst, std::fabs(lhs - rhs) / std::fabs(lhs));
    }
  }
  return worst;
}

PDWeights PDWeights::from_theta(std::vector<double> theta) {
  detail::require(!theta.empty(), "PDWeights: empty weight vector");
  NeumaierSum total;
  for (double t : theta) {
    detail::require(t >= 0.0 && std::isfinite(t), "PDWeights: weights must be finite and >= 0");
    total.add(t);
  }
  detail::require(std::fabs(total.value() - 1.0) <= 1e-10, "PDWeights: weights must sum to 1");
  PDWeights w;
  w.order_stats = theta;
  std::sort(w.order_stats.begin(), w.order_stats.end(), std::greater<>());
  w.theta = std::move(theta);
  return w;
}

double PDWeights::sum_of_squares() const {
  NeumaierSum s;
  for (double t : theta) s.add(t * t);
  return s.value();
}

PDWeights pd_weights_from_log_v(double alpha, std::span<const double> log_v) {
  std::vector<double> w(log_v.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = alpha * log_v[j];
  const double norm = log_sum_exp(w);
  for (double& x : w) x = std::exp(x - norm);
  return PDWeights::from_theta(std::move(w));
}

PDWeights sample_pd_weights(const PDParams& params, std::size_t n_particles, Rng& rng) {
  detail::require(n_particles >= 2, "sample_pd_weights: need at least 2 particles");
  std::vector<double> log_v(n_particles);
  stick_log_weights(params, log_v, rng);
  return pd_weights_from_log_v(params.alpha(), log_v);
}

namespace {

// Parent labels for `b` lineages drawn i.i.d. from cumulative weights.
std::vector<std::uint32_t> draw_parents(std::span<const double> cumulative,
                                        std::size_t b, Rng& rng) {
  const double total = cumulative.back();
  std::vector<std::uint32_t> out(b);
  for (auto& label : out) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    label = static_cast<std::uint32_t>(it - cumulative.begin());
  }
  return out;
}

std::vector<double> cumulative_of(std::span<const double> w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

}  // namespace

Partition multinomial_coalescent_step(const Partition& pi, const PDWeights& weights,
                                      Rng& rng) {
  detail::require(pi.block_count() >= 1, "multinomial step needs a nonempty partition");
  detail::require(!weights.theta.empty(), "multinomial step needs weights");
  const auto cum = cumulative_of(weights.theta);
  const auto parents = draw_parents(cum, pi.block_count(), rng);
  return coag(pi, Partition::from_labels(parents));
}

CoalescentTrajectory ancestral_partition(const GenealogyRecord& genealogy,
                                         std::span<const std::uint32_t> sample,
                                         std::size_t t_back) {
  const std::size_t g = genealogy.generations();
  detail::require(t_back <= g, "ancestral_partition: t_back beyond recorded horizon");
  std::vector<std::uint32_t> ancestor(sample.begin(), sample.end());
  for (auto a : ancestor)
    detail::require(a < genealogy.n_particles(), "ancestral_partition: sample index out of range");
  {
    auto sorted = ancestor;
    std::sort(sorted.begin(), sorted.end());
    detail::require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                    "ancestral_partition: sample indices must be distinct");
  }
  CoalescentTrajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(Partition::singletons(ancestor.size()));
  for (std::size_t s = 1; s <= t_back; ++s) {
    const auto parents = genealogy.parents(g - s + 1);
    for (auto& a : ancestor) a = parents[a];
    tr.times.push_back(static_cast<double>(s));
    tr.states.push_back(Partition::from_labels(ancestor));
  }
  return tr;
}

CoalescentTrajectory simulate_multinomial_coalescent(
    const PDParams& params, std::size_t n_particles, std::size_t n_lineages, Rng& rng,
    std::size_t max_generations, bool stop_after_first_merger) {
  detail::require(n_particles >= 2 && n_lineages >= 1,
                  "simulate_multinomial_coalescent: bad sizes");
  CoalescentTrajectory tr;
  Partition pi = Partition::singletons(n_lineages);
  tr.times.push_back(0.0);
  tr.states.push_back(pi);
  std::vector<double> log_v(n_particles);
  std::vector<double> w(n_particles);
  for (std::size_t t = 1; t <= max_generations && pi.block_count() > 1; ++t) {
    stick_log_weights(params, log_v, rng);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_particles; ++j) hi = std::max(hi, params.alpha() * log_v[j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n_particles; ++j) {
      acc += std::exp(params.alpha() * log_v[j] - hi);
      w[j] = acc;
    }
    const auto parents = draw_parents(w, pi.block_count(), rng);
    const std::size_t before = pi.block_count();
    pi = coag(pi, Partition::from_labels(parents));
    tr.times.push_back(static_cast<double>(t));
    tr.states.push_back(pi);
    if (stop_after_first_merger && pi.block_count() < before) break;
  }
  return tr;
}

CoalescentTrajectory simulate_lambda_coalescent(std::size_t n, const LambdaMeasure& measure,
                                                Rng& rng) {
  detail::require(n >= 2, "simulate_lambda_coalescent: n must be at least 2");
  CoalescentTrajectory tr;
  Partition pi = Partition::singletons(n);
  double t = 0.0;
  tr.times.push_back(t);
  tr.states.push_back(pi);
  std::vector<double> cum;
  std::vector<std::uint32_t> idx;
  while (pi.block_count() > 1) {
    const std::size_t b = pi.block_count();
    cum.assign(b + 1, 0.0);
    for (std::size_t k = 2; k <= b; ++k) {
      const double r = lambda_rate(b, k, measure);
      cum[k] = cum[k - 1] + (r > 0.0 ? std::exp(log_choose(b, k)) * r : 0.0);
    }
    const double total = cum[b];
    t += rng.exponential() / total;
    const double u = rng.uniform() * total;
    std::size_t k = 2;
    while (k < b && cum[k] <= u) ++k;

    // k distinct blocks, uniformly: partial Fisher-Yates.
    idx.resize(b);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(b - i));
      std::swap(idx[i], idx[j]);
    }
    std::vector<std::uint32_t> merge(b);
    std::iota(merge.begin(), merge.end(), 0u);
    const std::uint32_t target = *std::min_element(idx.begin(), idx.begin() + k);
    for (std::size_t i = 0; i < k; ++i) merge[idx[i]] = target;
    pi = coag(pi, Partition::from_labels(merge));
    tr.times.push_back(t);
    tr.states.push_back(pi);
  }
  return tr;
}

std::vector<double> first_merger_distribution(std::size_t n, const LambdaMeasure& measure) {
  detail::require(n >= 2, "first_merger_distribution: n must be at least 2");
  std::vector<double> p(n + 1, 0.0);
  double total = 0.0;
  for (std::size_t k = 2; k <= n; ++k) {
    const double r = lambda_rate(n, k, measure);
    p[k] = r > 0.0 ? std::exp(log_choose(n, k)) * r : 0.0;
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

namespace {

// Calls fn(block labels, block count) for every set partition of [r] in
// restricted-growth form.
void for_each_set_partition(std::size_t r,
                            const std::function<void(const std::vector<std::size_t>&,
                                                     std::size_t)>& fn) {
  std::vector<std::size_t> a(r, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == r) {
      fn(a, used);
      return;
    }
    for (std::size_t v = 0; v <= used && v < r; ++v) {
      a[i] = v;
      rec(i + 1, std::max(used, v + 1));
    }
  };
  if (r == 0) {
    fn(a, 0);
    return;
  }
  rec(0, 0);
}

// Integer partitions of n, parts nonincreasing.
void integer_partitions(std::size_t n, std::size_t max_part, std::vector<std::size_t>& cur,
                        std::vector<std::vector<std::size_t>>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  for (std::size_t p = std::min(n, max_part); p >= 1; --p) {
    cur.push_back(p);
    integer_partitions(n - p, p, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<double> merger_size_probabilities(std::span<const double> weights,
                                              std::size_t n_lineages) {
  const std::size_t n = n_lineages;
  detail::require(n >= 1 && n <= 8, "merger_size_probabilities: need 1 <= n <= 8");
  std::vector<double> p(n + 1, 0.0);
  std::vector<NeumaierSum> acc(n + 1);
  for (double t : weights) {
    double x = t;
    for (std::size_t m = 1; m <= n; ++m) {
      acc[m].add(x);
      x *= t;
    }
  }
  for (std::size_t m = 1; m <= n; ++m) p[m] = acc[m].value();
  return merger_probabilities_from_power_sums(p, n);
}

std::vector<double> merger_probabilities_from_power_sums(std::span<const double> p,
                                                         std::size_t n_lineages) {
  const std::size_t n = n_lineages;
  detail::require(n >= 1 && n <= 8 && p.size() > n,
                  "merger_probabilities_from_power_sums: need 1 <= n <= 8 power sums");
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  std::vector<std::vector<std::size_t>> parts;
  std::vector<std::size_t> cur;
  integer_partitions(n, n, cur, parts);

  std::vector<double> out(n + 1, 0.0);
  for (const auto& sizes : parts) {
    const std::size_t r = sizes.size();
    // Probability that r groups with the given sizes land on distinct
    // parents: Moebius inversion over set partitions of the groups.
    double distinct = 0.0;
    for_each_set_partition(r, [&](const std::vector<std::size_t>& lab, std::size_t nb) {
      std::vector<std::size_t> mass(nb, 0), cnt(nb, 0);
      for (std::size_t i = 0; i < r; ++i) {
        mass[lab[i]] += sizes[i];
        ++cnt[lab[i]];
      }
      double term = 1.0;
      for (std::size_t g = 0; g < nb; ++g) {
        term *= p[mass[g]] * fact[cnt[g] - 1];
        if (cnt[g] % 2 == 0) term = -term;
      }
      distinct += term;
    });
    // Number of set partitions of [n] with these block sizes.
    double mult = fact[n];
    std::vector<std::size_t> same(n + 1, 0);
    for (auto s : sizes) {
      mult /= fact[s];
      ++same[s];
    }
    for (auto c : same) mult /= fact[c];
    out[sizes.front()] += mult * distinct;
  }
  return out;
}

}  // namespace pdbrw
