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

#include <cstdint>
#include <span>
#include <vector>

#include "pdbrw/rng.hpp"

namespace pdbrw {

/// Walker/Vose alias table over log-weights.
class AliasTable {
 public:
  /// Builds from log-weights; the largest is shifted to 0 before exp.
  explicit AliasTable(std::span<const double> log_weights);

  std::uint32_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }
  /// Normalized probability of label i.
  double probability(std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
  std::vector<double> p_;
};

}  // namespace pdbrw
