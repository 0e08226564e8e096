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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pdbrw/brw.hpp"
#include "pdbrw/coalescent.hpp"
#include "pdbrw/distributions.hpp"
#include "pdbrw/stats.hpp"

namespace pdbrw {

using ParamValue = std::variant<double, std::int64_t, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct EstimatorReport {
  std::string name;
  ParamMap params;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  std::optional<double> reference;
  double elapsed_seconds = 0.0;

  static EstimatorReport make(std::string name, ParamMap params,
                              double estimate, double std_error,
                              std::uint64_t n_samples,
                              std::optional<double> reference,
                              double elapsed_seconds);
};

struct ScalingConstants {
  double alpha = 0.5;
  double theta = 0.0;
  double lambda = 1.0;
  double c_alpha_theta = 1.0;

  static ScalingConstants make(const PDParams& params);
  double L(double n) const;
};

/// Pooled x_eq increments over n_replicates runs of t_steps each, replicate
/// r using seed_stream(seed, r). Reference log log N for N >= 2 and the
/// exact single-particle speed for N = 1.
EstimatorReport estimate_speed(const BRWConfig& config, std::size_t t_steps,
                               std::size_t n_replicates, std::uint64_t seed);

enum class CnMode { semi_analytic, empirical_pair };
std::string to_string(CnMode m);
CnMode parse_cn_mode(const std::string& s);

/// Reference (1 - theta/alpha)/L_N when -alpha < theta < alpha.
EstimatorReport estimate_cn(const PDParams& params, std::size_t n_particles,
                            std::size_t n_replicates, CnMode mode,
                            std::uint64_t seed);

/// ((1-x)/x)^lambda / (lambda Gamma(lambda) Gamma(2-lambda)).
double tail_reference(const PDParams& params, double x);

struct TailPoint {
  double x = 0.0;
  double scaled_tail = 0.0;  ///< L_N * P(theta_(1) > x)
  double std_error = 0.0;
  double reference = 0.0;
};

std::vector<TailPoint> weight_tail_curve(const PDParams& params,
                                         std::size_t n_particles,
                                         std::span<const double> x_grid,
                                         std::size_t n_replicates,
                                         std::uint64_t seed);

/// Martingale moment at n_sticks, series centering on a decade grid up to
/// n_sticks, and E[Sigma_n]/log n (reference only for theta = 0).
std::vector<EstimatorReport> pd_diagnostics(const PDParams& params,
                                            std::size_t n_sticks,
                                            std::size_t n_replicates,
                                            std::uint64_t seed,
                                            double gamma = 1.0);

struct MergerStatistics {
  std::size_t n_lineages = 0;
  std::size_t n_trajectories = 0;
  std::size_t no_merger = 0;
  std::vector<double> counts;       ///< index = merger size
  std::vector<double> frequencies;  ///< among trajectories with a merger
  std::vector<double> reference;    ///< empty without a reference measure
  ChiSquare chi2;
};

/// Size of the first nontrivial merger (largest group formed in the first
/// step that reduces the block count); 0 if no merger occurs.
std::size_t first_merger_size(const CoalescentTrajectory& trajectory);

MergerStatistics merger_statistics(
    std::span<const CoalescentTrajectory> trajectories, std::size_t n_lineages,
    const LambdaMeasure* reference = nullptr);

/// Per-weight-draw quantities for coupled surveys over an N grid.
struct WeightDraw {
  double sum_sq = 0.0;      ///< sum theta^2
  double tail = 0.0;        ///< 1{theta_(1) > x}
  double second = 0.0;      ///< theta_(2)
  std::vector<double> merger;  ///< merger_size_probabilities(theta, n)
};

struct WeightSurveyConfig {
  double alpha = 0.5;
  double theta = 0.0;
  std::vector<std::size_t> n_grid;  ///< increasing
  std::size_t replicates = 1000;
  std::uint64_t seed = kDefaultSeed;
  double tail_x = 0.5;
  std::size_t n_lineages = 3;
};

/// draws[k][r]: replicate r at n_grid[k]. Each replicate draws one stick
/// sequence of length max(n_grid) and uses its prefixes, so the grid points
/// are coupled.
struct WeightSurvey {
  WeightSurveyConfig config;
  std::vector<std::vector<WeightDraw>> draws;

  std::vector<double> column(std::size_t k, double (*f)(const WeightDraw&)) const;
  /// P(first merger has size >= m | some merger), ratio estimator.
  Estimate merger_at_least(std::size_t k, std::size_t m) const;
};

WeightSurvey pd_weight_survey(const WeightSurveyConfig& config);

/// Genealogy weights theta_t(k) = e^{X_t(k) - x_eq} from a running BRW:
/// `generations` steps per replicate, one WeightDraw per step.
std::vector<WeightDraw> brw_weight_draws(const BRWConfig& config,
                                         std::size_t generations,
                                         std::size_t n_replicates,
                                         std::uint64_t seed, double tail_x,
                                         std::size_t n_lineages);

WeightDraw summarize_weights(std::span<const double> theta, double tail_x,
                             std::size_t n_lineages);

Estimate merger_at_least(std::span<const WeightDraw> draws, std::size_t m);

}  // namespace pdbrw
