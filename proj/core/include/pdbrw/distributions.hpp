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
#include <span>
#include <vector>

#include "pdbrw/rng.hpp"

namespace pdbrw {

/// Two-parameter Poisson-Dirichlet parameters, 0 < alpha < 1, theta > -alpha.
class PDParams {
 public:
  PDParams(double alpha, double theta);

  double alpha() const { return alpha_; }
  double theta() const { return theta_; }

  friend bool operator==(const PDParams&, const PDParams&) = default;

 private:
  double alpha_;
  double theta_;
};

/// A Beta draw kept in log space so that both tails are resolved.
struct BetaDraw {
  double log_x;
  double log_1mx;
};

/// log of a Gamma(shape, 1) draw. Shapes below 1 use
/// G(a) = G(a + 1) * U^(1/a), evaluated in logs.
double sample_log_gamma(double shape, Rng& rng);
BetaDraw sample_beta_log(double a, double b, Rng& rng);
double sample_beta(double a, double b, Rng& rng);
/// Poisson count; throws ResourceError when mean > cap.
std::size_t sample_poisson(double mean, Rng& rng);

/// Expected residual weight sum_{x < cutoff} e^{beta x} of PPP(e^{-x} dx).
double tail_weight_bound(double cutoff, double beta);

/// Ranked atoms of a PPP(e^{-x} dx); every atom above `cutoff` is present.
struct PPPSample {
  std::vector<double> points;
  double cutoff = 0.0;

  /// tail_weight_bound(cutoff, beta).
  double tail_weight_bound(double beta) const;
};

/// Default cap on the expected atom count of an above-cutoff draw.
inline constexpr double kDefaultPointCap = 5.0e7;

PPPSample sample_ppp_top_k(std::size_t k, Rng& rng);
PPPSample sample_ppp_above(double cutoff, Rng& rng,
                           double max_expected_count = kDefaultPointCap);
/// Atoms in the band (lower, upper], ranked decreasing. cutoff = lower.
PPPSample sample_ppp_band(double lower, double upper, Rng& rng,
                          double max_expected_count = kDefaultPointCap);

/// Stick-breaking realization of length n.
///
/// Linear fields are filled so that the telescoping identity
/// 1 - (v[0] + ... + v[j]) == m[j] holds to rounding: each v[j] is taken as
/// the difference of consecutive residuals. log_v and log_m carry the same
/// quantities without underflow.
struct StickSample {
  PDParams params{0.5, 0.0};
  std::vector<double> y;
  std::vector<double> v;
  std::vector<double> m;
  std::vector<double> s;
  std::vector<double> sigma;
  std::vector<double> log_y;
  std::vector<double> log_v;
  std::vector<double> log_m;

  std::size_t size() const { return y.size(); }
};

StickSample stick_breaking(const PDParams& params, std::size_t n, Rng& rng);

/// Lean variant: log V_j into `log_v` (size n) and returns log M_n.
double stick_log_weights(const PDParams& params, std::span<double> log_v,
                         Rng& rng);

double psi_alpha(double alpha);
/// E[M_inf^gamma] for the stick residual martingale limit.
double phi_moment(const PDParams& params, double gamma);
/// Same moment through the reduced Gamma ratio; needs theta > 0 and
/// gamma > -theta.
double phi_moment_reduced(const PDParams& params, double gamma);
/// p-th moment of the Mittag-Leffler(alpha) law.
double mittag_leffler_moment(double alpha, double p);

}  // namespace pdbrw
