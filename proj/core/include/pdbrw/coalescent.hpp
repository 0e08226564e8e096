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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdbrw/brw.hpp"
#include "pdbrw/distributions.hpp"
#include "pdbrw/rng.hpp"

namespace pdbrw {

/// Partition of {0, ..., n-1} stored as canonical block labels: label[i] is
/// the rank of i's block when blocks are ordered by least element.
///
/// String form is 1-based, blocks separated by '|': "1 3|2".
class Partition {
 public:
  Partition() = default;
  static Partition singletons(std::size_t n);
  /// Canonicalizes arbitrary labels (equal labels share a block).
  static Partition from_labels(std::span<const std::uint32_t> labels);
  static Partition from_blocks(const std::vector<std::vector<std::uint32_t>>& blocks);
  static Partition from_string(const std::string& text);

  std::size_t size() const { return labels_.size(); }
  std::size_t block_count() const { return n_blocks_; }
  std::uint32_t block_of(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  std::vector<std::vector<std::uint32_t>> blocks() const;
  std::size_t largest_block() const;
  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::size_t n_blocks_ = 0;
};

/// Merges blocks of pi according to pi_prime, which partitions block
/// indices; indices of pi_prime beyond pi.block_count() are ignored.
Partition coag(const Partition& pi, const Partition& pi_prime);
Partition restrict(const Partition& pi, std::size_t m);

class LambdaMeasure {
 public:
  enum class Kind { beta_family, kingman_dirac0, general };

  /// Beta(2 - lambda, lambda) probability measure, 0 < lambda < 2.
  static LambdaMeasure beta_family(double lambda);
  static LambdaMeasure kingman();
  /// Absolutely continuous measure with the given density on (0, 1).
  static LambdaMeasure general(std::function<double(double)> density,
                               double total_mass);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double total_mass() const { return mass_; }
  /// Density on (0,1); beta_family and general only.
  double density(double x) const;

 private:
  Kind kind_ = Kind::kingman_dirac0;
  double lambda_ = 0.0;
  double mass_ = 1.0;
  std::function<double(double)> density_;
};

/// lambda_{b,k}: closed form for beta_family and Kingman, quadrature for
/// general measures.
double lambda_rate(std::size_t b, std::size_t k, const LambdaMeasure& measure);
/// Always integrates the density numerically (tanh-sinh).
double lambda_rate_quadrature(std::size_t b, std::size_t k,
                              const LambdaMeasure& measure);

class RateTable {
 public:
  RateTable(std::size_t b_max, const LambdaMeasure& measure);

  std::size_t b_max() const { return b_max_; }
  double rate(std::size_t b, std::size_t k) const;
  /// max relative deviation of lambda_{b,k} from lambda_{b+1,k} +
  /// lambda_{b+1,k+1} over stored entries.
  double max_recursion_error() const;

 private:
  std::size_t b_max_;
  std::vector<double> rates_;
};

struct PDWeights {
  std::vector<double> theta;        ///< sampling order
  std::vector<double> order_stats;  ///< decreasing

  static PDWeights from_theta(std::vector<double> theta);
  double sum_of_squares() const;
};

/// theta_j = V_j^alpha / sum_{i<=N} V_i^alpha from a length-N stick sample.
PDWeights sample_pd_weights(const PDParams& params, std::size_t n_particles,
                            Rng& rng);
/// Same from precomputed log V_j.
PDWeights pd_weights_from_log_v(double alpha, std::span<const double> log_v);

/// One generation back: each block picks a parent from weights.theta.
Partition multinomial_coalescent_step(const Partition& pi,
                                      const PDWeights& weights, Rng& rng);

struct CoalescentTrajectory {
  std::vector<double> times;
  std::vector<Partition> states;
};

/// Ancestral partition of `sample` (0-based indices into the last recorded
/// generation), traced t_back generations into the past.
CoalescentTrajectory ancestral_partition(const GenealogyRecord& genealogy,
                                         std::span<const std::uint32_t> sample,
                                         std::size_t t_back);

/// Discrete-time ancestral process of n lineages with fresh PD(alpha, theta)
/// weights over N parents each generation (times are generation counts).
/// Stops at one block, after the first merger if requested, or at
/// max_generations.
CoalescentTrajectory simulate_multinomial_coalescent(
    const PDParams& params, std::size_t n_particles, std::size_t n_lineages,
    Rng& rng, std::size_t max_generations, bool stop_after_first_merger = false);

CoalescentTrajectory simulate_lambda_coalescent(std::size_t n,
                                                const LambdaMeasure& measure,
                                                Rng& rng);

/// Law of the first merger size: entry k (2 <= k <= n) is
/// C(n,k) lambda_{n,k} / lambda_n; entries 0 and 1 are 0.
std::vector<double> first_merger_distribution(std::size_t n,
                                              const LambdaMeasure& measure);

/// For n lineages choosing parents i.i.d. from `weights`, entry m is the
/// probability that the largest group of lineages sharing a parent has size
/// m (entry 1 is "no merger"). Exact, via power sums and inclusion-exclusion
/// over set partitions; n <= 8.
std::vector<double> merger_size_probabilities(std::span<const double> weights,
                                              std::size_t n_lineages);
/// Same from power sums: power_sums[m] = sum theta^m for 1 <= m <= n.
std::vector<double> merger_probabilities_from_power_sums(
    std::span<const double> power_sums, std::size_t n_lineages);

}  // namespace pdbrw
