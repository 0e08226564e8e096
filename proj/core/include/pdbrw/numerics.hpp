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

#include <cmath>
#include <span>

namespace pdbrw {

/// log(sum(exp(v))) with max shift. Throws ParameterError on empty input.
double log_sum_exp(std::span<const double> values);

/// Log of |Gamma(x)|; thread-safe.
double log_gamma(double x);
/// Gamma(x)^-1, returning 0 at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);
double digamma(double x);
/// log B(a, b).
double log_beta(double a, double b);
/// Regularized incomplete Beta I_x(a, b).
double beta_cdf(double x, double a, double b);

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace pdbrw
