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
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdbrw/alias_table.hpp"
#include "pdbrw/rng.hpp"

namespace pdbrw {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

enum class Engine { direct, pd_exact, exponential_model };
enum class Variant { standard, drop_first_sampled };

std::string to_string(Engine e);
std::string to_string(Variant v);
Engine parse_engine(const std::string& s);
Variant parse_variant(const std::string& s);

struct BRWConfig {
  std::size_t n_particles = 1;
  double beta = 2.0;  ///< > 1, or kInfiniteBeta
  Engine engine = Engine::direct;
  /// Relative tail-weight tolerance used when the total child weight has
  /// to be certified (see branch_direct).
  double truncation_epsilon = 1e-12;
  Variant variant = Variant::standard;
  /// Sticks per pd_exact step; 0 means max(N, 10^4).
  std::size_t n_sticks = 0;
  /// Cap on expected materialized child points per step.
  double max_points = kDefaultPointCapBrw;

  static constexpr double kDefaultPointCapBrw = 2.0e7;

  /// Throws ParameterError on any violated invariant.
  void validate() const;
  std::size_t sticks() const;
  /// Particles sampled per step (N, or N+1 with drop_first_sampled).
  std::size_t n_sampled() const;
};

struct PopulationState {
  std::vector<double> positions;  ///< sampling order
  double x_eq = 0.0;
  std::uint64_t generation = 0;

  static PopulationState from_positions(std::vector<double> positions,
                                        std::uint64_t generation = 0);
  std::size_t size() const { return positions.size(); }
};

/// Parent labels per generation, 0-based (label k is particle k+1).
class GenealogyRecord {
 public:
  explicit GenealogyRecord(std::size_t n_particles = 0) : n_(n_particles) {}

  void append(std::span<const std::uint32_t> parents);
  std::size_t n_particles() const { return n_; }
  std::size_t generations() const { return n_ == 0 ? 0 : labels_.size() / n_; }
  /// Parents of generation t (1-based, 1 <= t <= generations()).
  std::span<const std::uint32_t> parents(std::size_t t) const;

 private:
  std::size_t n_;
  std::vector<std::uint32_t> labels_;
};

/// Child points of one branching step, relative ranking exact down to cutoff.
struct ChildPointsSample {
  double origin = 0.0;                     ///< x_eq of the parents
  std::vector<double> points;              ///< absolute, decreasing
  std::vector<double> relative;            ///< points - origin, as drawn
  std::vector<double> weight;              ///< e^{beta * relative}
  /// Parent label per point. Left empty by the step engine, which marks
  /// only the selected points (marks are i.i.d. and independent of position).
  std::vector<std::uint32_t> parent_marks;
  double cutoff = -std::numeric_limits<double>::infinity();
  double relative_cutoff = -std::numeric_limits<double>::infinity();
  /// e^{(beta-1)(cutoff-origin)}/(beta-1): expected weight e^{beta(x-origin)}
  /// carried by atoms below the cutoff.
  double tail_weight_bound = 0.0;
  /// sum over retained points of e^{beta(x-origin)}.
  double retained_weight = 0.0;
  std::shared_ptr<const AliasTable> mark_law;
};

/// Branches the population into a single PPP(e^{-(x-x_eq)} dx) with marks.
///
/// Materializes the top 2N+64 atoms. With certify_total_weight the cutoff is
/// lowered band by band (at most 8 times) until
/// tail_weight_bound <= truncation_epsilon * retained_weight, and a
/// ResourceError is thrown if that needs more than config.max_points atoms.
ChildPointsSample branch_direct(const PopulationState& state,
                                const BRWConfig& config, Rng& rng,
                                bool certify_total_weight = false);

/// Sequential e^{beta x}-weighted sampling without replacement.
///
/// Uses exponential race keys E_k e^{-beta x_k}; ascending keys give the
/// sampling order. Atoms below `children.cutoff` are realized on demand by
/// thinning a homogeneous key process of rate tail_weight_bound, so the
/// result is exact regardless of where the cutoff sits. Realized tail atoms
/// are appended to `children` (still decreasing). Returns child indices in
/// sampling order.
std::vector<std::size_t> select_weighted_without_replacement(
    ChildPointsSample& children, std::size_t n_select, double beta, Rng& rng);

struct StepResult {
  PopulationState state;
  std::vector<std::uint32_t> parents;
  std::optional<double> dropped_position;
  std::optional<std::uint32_t> dropped_parent;
};

StepResult step_direct(const PopulationState& state, const BRWConfig& config,
                       Rng& rng);
StepResult step_pd_exact(const PopulationState& state, const BRWConfig& config,
                         Rng& rng);
StepResult step_exponential_model(const PopulationState& state,
                                  const BRWConfig& config, Rng& rng);
/// Dispatches on config.engine.
StepResult step(const PopulationState& state, const BRWConfig& config,
                Rng& rng);

struct ExponentialModelSample {
  double z = 0.0;
  std::vector<double> e;

  /// z + e_j sorted decreasing.
  std::vector<double> ranked() const;
};

ExponentialModelSample sample_exponential_model_points(std::size_t n, Rng& rng);

/// Normalized weight of the first child selected by the direct engine from
/// a population of N particles at 0, with total weight certified to
/// config.truncation_epsilon.
double first_selected_normalized_weight(const BRWConfig& config, Rng& rng);

/// E[log L_hat] - E[log L] for the pd_exact plug-in with n sticks.
double pd_exact_log_l_bias(double alpha, std::size_t n_sticks);

/// Mean one-step x_eq increment at N = 1.
double single_particle_speed(double beta);

struct GenerationSummary {
  std::uint64_t generation = 0;
  double x_eq = 0.0;
  double max_pos = 0.0;
  double min_pos = 0.0;
};

struct RunOptions {
  std::vector<double> initial_positions;  ///< empty means N zeros
  bool record_genealogy = true;
  bool keep_states = false;
};

struct RunResult {
  std::vector<GenerationSummary> trajectory;  ///< T + 1 entries
  std::vector<PopulationState> states;        ///< only with keep_states
  GenealogyRecord genealogy;
  PopulationState final_state;

  std::vector<double> increments() const;
};

RunResult run(const BRWConfig& config, std::size_t horizon, Rng& rng,
              const RunOptions& options = {});

}  // namespace pdbrw
