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

#include "pdbrw/io.hpp"

#include <charconv>
#include <cmath>

#include "json.hpp"

namespace pdbrw {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, std::span<const GenerationSummary> trajectory) {
  out << "generation,x_eq,max_pos,min_pos\n";
  for (const auto& g : trajectory)
    out << g.generation << ',' << format_double(g.x_eq) << ',' << format_double(g.max_pos)
        << ',' << format_double(g.min_pos) << '\n';
}

void write_genealogy_csv(std::ostream& out, const GenealogyRecord& genealogy) {
  out << "generation,child_index,parent_index\n";
  for (std::size_t t = 1; t <= genealogy.generations(); ++t) {
    const auto parents = genealogy.parents(t);
    for (std::size_t i = 0; i < parents.size(); ++i)
      out << t << ',' << i + 1 << ',' << parents[i] + 1 << '\n';
  }
}

void write_rate_table_csv(std::ostream& out, const RateTable& table) {
  out << "b,k,rate\n";
  for (std::size_t b = 2; b <= table.b_max(); ++b)
    for (std::size_t k = 2; k <= b; ++k)
      out << b << ',' << k << ',' << format_double(table.rate(b, k)) << '\n';
}

void write_coalescent_csv(std::ostream& out,
                          std::span<const CoalescentTrajectory> trajectories,
                          double time_scale) {
  out << "replicate,time,rescaled_time,n_blocks,partition\n";
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const auto& tr = trajectories[r];
    for (std::size_t i = 0; i < tr.states.size(); ++i)
      out << r << ',' << format_double(tr.times[i]) << ','
          << format_double(tr.times[i] * time_scale) << ',' << tr.states[i].block_count()
          << ',' << tr.states[i].to_string() << '\n';
  }
}

namespace {

std::string param_text(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

nlohmann::ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::ordered_json report_json(const EstimatorReport& r) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.params) {
    if (const auto* d = std::get_if<double>(&v))
      params[k] = number(*d);
    else if (const auto* i = std::get_if<std::int64_t>(&v))
      params[k] = *i;
    else
      params[k] = std::get<std::string>(v);
  }
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["params"] = params;
  j["estimate"] = number(r.estimate);
  j["std_error"] = number(r.std_error);
  j["n_samples"] = r.n_samples;
  j["ci95"] = {number(r.ci95_low), number(r.ci95_high)};
  j["reference"] = r.reference ? number(*r.reference) : nullptr;
  j["elapsed_seconds"] = number(r.elapsed_seconds);
  return j;
}

}  // namespace

void write_reports_csv(std::ostream& out, std::span<const EstimatorReport> reports) {
  out << "name,params,estimate,std_error,n_samples,ci95_low,ci95_high,reference,"
         "elapsed_seconds\n";
  for (const auto& r : reports) {
    std::string params;
    for (const auto& [k, v] : r.params) {
      if (!params.empty()) params += ';';
      params += k + '=' + param_text(v);
    }
    out << r.name << ',' << params << ',' << format_double(r.estimate) << ','
        << format_double(r.std_error) << ',' << r.n_samples << ','
        << format_double(r.ci95_low) << ',' << format_double(r.ci95_high) << ','
        << (r.reference ? format_double(*r.reference) : "") << ','
        << format_double(r.elapsed_seconds) << '\n';
  }
}

void write_tail_csv(std::ostream& out, std::span<const TailPoint> curve) {
  out << "x,scaled_tail,std_error,ci95_low,ci95_high,reference\n";
  for (const auto& p : curve)
    out << format_double(p.x) << ',' << format_double(p.scaled_tail) << ','
        << format_double(p.std_error) << ',' << format_double(p.scaled_tail - 1.96 * p.std_error)
        << ',' << format_double(p.scaled_tail + 1.96 * p.std_error) << ','
        << format_double(p.reference) << '\n';
}

std::string report_to_json(const EstimatorReport& report) {
  return report_json(report).dump();
}

std::string merger_statistics_to_json(const MergerStatistics& s) {
  nlohmann::ordered_json j;
  j["name"] = "merger_statistics";
  j["n_lineages"] = s.n_lineages;
  j["n_trajectories"] = s.n_trajectories;
  j["no_merger"] = s.no_merger;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  nlohmann::ordered_json freq = nlohmann::ordered_json::object();
  nlohmann::ordered_json ref = nlohmann::ordered_json::object();
  for (std::size_t k = 2; k <= s.n_lineages; ++k) {
    counts[std::to_string(k)] = s.counts[k];
    freq[std::to_string(k)] = number(s.frequencies[k]);
    if (!s.reference.empty()) ref[std::to_string(k)] = number(s.reference[k]);
  }
  j["counts"] = counts;
  j["frequencies"] = freq;
  j["reference"] = s.reference.empty() ? nlohmann::ordered_json(nullptr) : ref;
  if (!s.reference.empty()) {
    j["chi2"] = number(s.chi2.statistic);
    j["chi2_dof"] = s.chi2.dof;
  } else {
    j["chi2"] = nullptr;
    j["chi2_dof"] = nullptr;
  }
  return j.dump();
}

}  // namespace pdbrw
