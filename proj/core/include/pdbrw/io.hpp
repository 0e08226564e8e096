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

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pdbrw/brw.hpp"
#include "pdbrw/coalescent.hpp"
#include "pdbrw/estimators.hpp"

namespace pdbrw {

/// Shortest round-trip-safe form with 17 significant digits, '.' decimal,
/// independent of the global locale.
std::string format_double(double x);

void write_trajectory_csv(std::ostream& out,
                          std::span<const GenerationSummary> trajectory);
/// Labels are written 1-based.
void write_genealogy_csv(std::ostream& out, const GenealogyRecord& genealogy);
void write_rate_table_csv(std::ostream& out, const RateTable& table);
/// rescaled_time = time * time_scale; pass c_N for discrete generations.
void write_coalescent_csv(std::ostream& out,
                          std::span<const CoalescentTrajectory> trajectories,
                          double time_scale = 1.0);
void write_reports_csv(std::ostream& out,
                       std::span<const EstimatorReport> reports);
void write_tail_csv(std::ostream& out, std::span<const TailPoint> curve);

/// One JSON object per report.
std::string report_to_json(const EstimatorReport& report);
std::string merger_statistics_to_json(const MergerStatistics& stats);

}  // namespace pdbrw
