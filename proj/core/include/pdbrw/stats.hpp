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
#include <vector>

namespace pdbrw {

/// Streaming mean/variance (Welford), mergeable (Chan et al.).
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  double std_error() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;

  double ci_low() const { return value - 1.96 * std_error; }
  double ci_high() const { return value + 1.96 * std_error; }
};

Estimate mean_of(std::span<const double> xs);
/// Paired difference mean(a - b).
Estimate paired_difference(std::span<const double> a, std::span<const double> b);
/// mean(a)/mean(b) with delta-method standard error.
Estimate ratio_of_means(std::span<const double> a, std::span<const double> b);

/// sup |F_n - F|; sorts a copy of the sample.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);
double ks_two_sample(std::span<const double> a, std::span<const double> b);
double correlation(std::span<const double> a, std::span<const double> b);
double lag1_autocorrelation(std::span<const double> xs);

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  std::size_t bins = 0;
};

/// Pearson chi-square with adjacent bins pooled until each expected count
/// is at least `min_expected`.
ChiSquare chi_square(std::span<const double> observed,
                     std::span<const double> probabilities,
                     double min_expected = 5.0);

double gumbel_cdf(double x);

}  // namespace pdbrw
