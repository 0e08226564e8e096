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

#include "pdbrw/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "pdbrw/error.hpp"
#include "pdbrw/numerics.hpp"

namespace pdbrw {

PDParams::PDParams(double alpha, double theta) : alpha_(alpha), theta_(theta) {
  detail::require(alpha > 0.0 && alpha < 1.0,
                  "PDParams: alpha must lie in (0,1), got " + std::to_string(alpha));
  detail::require(theta > -alpha && std::isfinite(theta),
                  "PDParams: theta must exceed -alpha, got " + std::to_string(theta));
}

double sample_log_gamma(double shape, Rng& rng) {
  detail::require(shape > 0.0 && std::isfinite(shape),
                  "sample_log_gamma: shape must be positive");
  if (shape < 1.0) {
    return sample_log_gamma(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return std::log(d * v);
  }
}

BetaDraw sample_beta_log(double a, double b, Rng& rng) {
  detail::require(a > 0.0 && b > 0.0, "sample_beta: shapes must be positive");
  const double la = sample_log_gamma(a, rng);
  const double lb = sample_log_gamma(b, rng);
  const double hi = std::max(la, lb);
  const double lse = hi + std::log1p(std::exp(std::min(la, lb) - hi));
  return {la - lse, lb - lse};
}

namespace {

// Linear value in (0,1) taken from whichever log is more accurate.
double open_unit(const BetaDraw& d) {
  double x = d.log_x < d.log_1mx ? std::exp(d.log_x) : -std::expm1(d.log_1mx);
  if (x <= 0.0) x = std::numeric_limits<double>::denorm_min();
  if (x >= 1.0) x = std::nextafter(1.0, 0.0);
  return x;
}

}  // namespace

double sample_beta(double a, double b, Rng& rng) {
  return open_unit(sample_beta_log(a, b, rng));
}

std::size_t sample_poisson(double mean, Rng& rng) {
  detail::require(mean >= 0.0, "sample_poisson: negative mean");
  if (mean == 0.0) return 0;
  std::poisson_distribution<long long> pois(mean);
  return static_cast<std::size_t>(pois(rng));
}

double tail_weight_bound(double cutoff, double beta) {
  detail::require(beta > 1.0, "tail_weight_bound: beta must exceed 1");
  if (std::isinf(beta)) return cutoff < 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::exp((beta - 1.0) * cutoff) / (beta - 1.0);
}

double PPPSample::tail_weight_bound(double beta) const {
  return pdbrw::tail_weight_bound(cutoff, beta);
}

PPPSample sample_ppp_top_k(std::size_t k, Rng& rng) {
  detail::require(k >= 1, "sample_ppp_top_k: k must be positive");
  PPPSample out;
  out.points.resize(k);
  double gamma = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    gamma += rng.exponential();
    out.points[j] = -std::log(gamma);
  }
  out.cutoff = out.points.back();
  return out;
}

PPPSample sample_ppp_band(double lower, double upper, Rng& rng,
                          double max_expected_count) {
  detail::require(!(upper < lower), "sample_ppp_band: upper below lower");
  const double width = upper - lower;
  const double q = std::isinf(width) ? 1.0 : -std::expm1(-width);
  const double mean = std::exp(-lower) * q;
  if (!(mean <= max_expected_count)) {
    throw ResourceError("PPP band below " + std::to_string(lower) +
                        " needs ~" + std::to_string(mean) +
                        " atoms, above the cap; use a larger truncation epsilon");
  }
  PPPSample out;
  out.cutoff = lower;
  const std::size_t count = sample_poisson(mean, rng);
  out.points.resize(count);
  for (double& x : out.points) x = lower - std::log1p(-rng.uniform() * q);
  std::sort(out.points.begin(), out.points.end(), std::greater<>());
  return out;
}

PPPSample sample_ppp_above(double cutoff, Rng& rng, double max_expected_count) {
  return sample_ppp_band(cutoff, std::numeric_limits<double>::infinity(), rng,
                         max_expected_count);
}

StickSample stick_breaking(const PDParams& params, std::size_t n, Rng& rng) {
  detail::require(n >= 1, "stick_breaking: n must be positive");
  const double alpha = params.alpha();
  const double theta = params.theta();
  StickSample st;
  st.params = params;
  for (auto* vec : {&st.y, &st.v, &st.m, &st.s, &st.sigma, &st.log_y, &st.log_v,
                    &st.log_m})
    vec->resize(n);

  double log_m = 0.0;
  double m_lin = 1.0;
  double s = 0.0;
  double sigma = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double jj = static_cast<double>(j + 1);
    const BetaDraw d = sample_beta_log(1.0 - alpha, theta + jj * alpha, rng);
    st.log_y[j] = d.log_x;
    st.y[j] = open_unit(d);
    st.log_v[j] = log_m + d.log_x;
    log_m += d.log_1mx;
    st.log_m[j] = log_m;

    // v is the exact difference of consecutive linear residuals, so the
    // running 1 - sum(v) reproduces m without accumulated rounding.
    double v = m_lin - std::exp(log_m);
    if (v <= 0.0) v = std::max(std::exp(st.log_v[j]),
                               std::numeric_limits<double>::denorm_min());
    st.v[j] = v;
    m_lin -= v;
    st.m[j] = m_lin;

    s += std::exp(alpha * d.log_x + (alpha - 1.0) * std::log(jj));
    st.s[j] = s;
    sigma += std::exp(alpha * st.log_v[j]);
    st.sigma[j] = sigma;
  }
  return st;
}

double stick_log_weights(const PDParams& params, std::span<double> log_v,
                         Rng& rng) {
  const double alpha = params.alpha();
  const double theta = params.theta();
  double log_m = 0.0;
  for (std::size_t j = 0; j < log_v.size(); ++j) {
    const BetaDraw d = sample_beta_log(
        1.0 - alpha, theta + static_cast<double>(j + 1) * alpha, rng);
    log_v[j] = log_m + d.log_x;
    log_m += d.log_1mx;
  }
  return log_m;
}

double psi_alpha(double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "psi_alpha: alpha must lie in (0,1)");
  return std::exp(-alpha * std::log(alpha) - log_gamma(1.0 - alpha));
}

double phi_moment(const PDParams& params, double gamma) {
  const double a = params.alpha();
  const double t = params.theta();
  detail::require(gamma > -(t + a), "phi_moment: gamma must exceed -(theta+alpha)");
  return std::exp(gamma * std::log(a) + log_gamma(t + 1.0) +
                  log_gamma((t + gamma) / a + 1.0) - log_gamma(t + gamma + 1.0) -
                  log_gamma(t / a + 1.0));
}

double phi_moment_reduced(const PDParams& params, double gamma) {
  const double a = params.alpha();
  const double t = params.theta();
  detail::require(t > 0.0 && gamma > -t,
                  "phi_moment_reduced: needs theta > 0 and gamma > -theta");
  return std::exp(gamma * std::log(a) + log_gamma(t) + log_gamma((t + gamma) / a) -
                  log_gamma(t + gamma) - log_gamma(t / a));
}

double mittag_leffler_moment(double alpha, double p) {
  detail::require(alpha > 0.0 && alpha < 1.0,
                  "mittag_leffler_moment: alpha must lie in (0,1)");
  detail::require(p > -1.0, "mittag_leffler_moment: p must exceed -1");
  return std::exp(log_gamma(p + 1.0) - log_gamma(p * alpha + 1.0) -
                  p * log_gamma(1.0 - alpha));
}

}  // namespace pdbrw
