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

#include "pdbrw/stats.hpp"

#include <algorithm>
#include <cmath>

#include "pdbrw/error.hpp"

namespace pdbrw {

void RunningStats::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double d = o.mean_ - mean_;
  mean_ += d * nb / n;
  m2_ += o.m2_ + d * d * na * nb / n;
  n_ += o.n_;
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

Estimate mean_of(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return {s.mean(), s.std_error()};
}

Estimate paired_difference(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "paired_difference: size mismatch");
  RunningStats s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] - b[i]);
  return {s.mean(), s.std_error()};
}

Estimate ratio_of_means(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size() && a.size() > 1,
                  "ratio_of_means: need matched samples");
  RunningStats sa, sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa.add(a[i]);
    sb.add(b[i]);
  }
  const double r = sa.mean() / sb.mean();
  // Residuals a - r b carry the first-order error of the ratio.
  RunningStats res;
  for (std::size_t i = 0; i < a.size(); ++i) res.add(a[i] - r * b[i]);
  return {r, res.std_error() / std::fabs(sb.mean())};
}

double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf) {
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n,
                  static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size() && a.size() > 1,
                  "correlation: need matched samples");
  RunningStats sa, sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa.add(a[i]);
    sb.add(b[i]);
  }
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    c += (a[i] - sa.mean()) * (b[i] - sb.mean());
  c /= static_cast<double>(a.size() - 1);
  return c / std::sqrt(sa.variance() * sb.variance());
}

double lag1_autocorrelation(std::span<const double> xs) {
  detail::require(xs.size() > 2, "lag1_autocorrelation: too few samples");
  return correlation(xs.first(xs.size() - 1), xs.subspan(1));
}

ChiSquare chi_square(std::span<const double> observed,
                     std::span<const double> probabilities,
                     double min_expected) {
  detail::require(observed.size() == probabilities.size(),
                  "chi_square: size mismatch");
  double total = 0.0;
  for (double o : observed) total += o;
  std::vector<double> obs, exp;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += probabilities[i] * total;
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }
  ChiSquare out;
  out.bins = exp.size();
  out.dof = exp.size() > 1 ? exp.size() - 1 : 0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (exp[i] > 0.0) {
      const double d = obs[i] - exp[i];
      out.statistic += d * d / exp[i];
    }
  }
  return out;
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

}  // namespace pdbrw
