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

#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pdbrw/brw.hpp"
#include "pdbrw/coalescent.hpp"
#include "pdbrw/distributions.hpp"
#include "pdbrw/error.hpp"
#include "pdbrw/estimators.hpp"
#include "pdbrw/io.hpp"
#include "pdbrw/parallel.hpp"
#include "pdbrw/rng.hpp"

#ifndef PDBRW_VERSION
#define PDBRW_VERSION "unknown"
#endif

namespace pdbrw::cli {

using json = nlohmann::ordered_json;

namespace {

KeySpec key(std::string name, KeyType type, std::string help, json def = nullptr,
            bool required = false, std::vector<std::string> choices = {}) {
  return KeySpec{std::move(name), type, std::move(help), required, std::move(def),
                 std::move(choices)};
}

KeySpec required(std::string name, KeyType type, std::string help) {
  return key(std::move(name), type, std::move(help), nullptr, true);
}

KeySpec format_key(const char* def) {
  return key("format", KeyType::choice, "output format", def, false, {"csv", "json"});
}

KeySpec output_key() { return key("output", KeyType::path, "output file (stdout if omitted)"); }
KeySpec seed_key() {
  return key("seed", KeyType::seed, "master seed", json(static_cast<std::uint64_t>(kDefaultSeed)));
}
KeySpec entropy_key() {
  return key("entropy", KeyType::flag, "draw the master seed from the OS when --seed is absent",
             false);
}
KeySpec timing_key() {
  return key("timing", KeyType::flag, "record elapsed_seconds in output files", false);
}
KeySpec engine_key() {
  return key("engine", KeyType::choice, "direct | pd_exact | exponential_model (from beta if absent)",
             nullptr, false, {"direct", "pd_exact", "exponential_model"});
}
KeySpec variant_key() {
  return key("variant", KeyType::choice, "selection variant", "standard", false,
             {"standard", "drop_first_sampled"});
}
KeySpec epsilon_key() {
  return key("epsilon", KeyType::real, "relative tail-weight tolerance", 1e-12);
}
KeySpec sticks_key(json def) {
  return key("n-sticks", KeyType::count, "sticks per PD draw (0: max(N, 10^4))", std::move(def));
}

const std::map<std::string, std::vector<KeySpec>>& schema() {
  static const std::map<std::string, std::vector<KeySpec>> s = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    m["simulate"] = {required("n", KeyType::count, "number of particles N"),
                     required("beta", KeyType::beta, "selection strength (> 1 or inf)"),
                     engine_key(),
                     variant_key(),
                     required("steps", KeyType::count, "generations to simulate"),
                     epsilon_key(),
                     sticks_key(0),
                     seed_key(),
                     entropy_key(),
                     output_key(),
                     key("genealogy", KeyType::path, "also write parent labels to this CSV"),
                     format_key("csv")};
    m["speed"] = {required("n", KeyType::count, "number of particles N"),
                  required("beta", KeyType::beta, "selection strength (> 1 or inf)"),
                  engine_key(),
                  variant_key(),
                  key("steps", KeyType::count, "steps per replicate", 1000),
                  key("replicates", KeyType::count, "independent replicates", 8),
                  epsilon_key(),
                  sticks_key(0),
                  seed_key(),
                  entropy_key(),
                  timing_key(),
                  output_key(),
                  format_key("json")};
    m["cn"] = {required("n", KeyType::count, "number of particles N"),
               required("alpha", KeyType::real, "PD alpha in (0,1)"),
               key("theta", KeyType::real, "PD theta > -alpha", 0.0),
               key("replicates", KeyType::count, "weight replicates", 1000),
               key("mode", KeyType::choice, "estimator", "semi_analytic", false,
                   {"semi_analytic", "empirical_pair"}),
               seed_key(),
               entropy_key(),
               timing_key(),
               output_key(),
               format_key("json")};
    m["coalescent"] = {
        key("n-lineages", KeyType::count, "sampled lineages", 3),
        key("replicates", KeyType::count, "trajectories", 1000),
        key("measure", KeyType::choice, "simulate a Lambda-coalescent instead", nullptr, false,
            {"beta", "kingman"}),
        key("lambda", KeyType::real, "Beta(2-lambda, lambda) parameter"),
        key("alpha", KeyType::real, "PD alpha of the multinomial coalescent"),
        key("theta", KeyType::real, "PD theta of the multinomial coalescent"),
        key("n", KeyType::count, "number of parents N per generation"),
        key("steps", KeyType::count, "maximum generations per trajectory"),
        key("first-merger", KeyType::flag, "stop each trajectory at its first merger"),
        seed_key(),
        entropy_key(),
        output_key(),
        format_key("csv")};
    m["rates"] = {key("measure", KeyType::choice, "Lambda measure", "beta", false,
                      {"beta", "kingman"}),
                  key("lambda", KeyType::real, "Beta(2-lambda, lambda) parameter"),
                  required("bmax", KeyType::count, "largest block count b"),
                  output_key(),
                  format_key("csv")};
    m["pd-diagnostics"] = {required("alpha", KeyType::real, "PD alpha in (0,1)"),
                           key("theta", KeyType::real, "PD theta > -alpha", 0.0),
                           sticks_key(10000),
                           key("replicates", KeyType::count, "replicates", 1000),
                           key("gamma", KeyType::real, "martingale moment order", 1.0),
                           seed_key(),
                           entropy_key(),
                           timing_key(),
                           output_key(),
                           format_key("json")};
    m["tails"] = {required("alpha", KeyType::real, "PD alpha in (0,1)"),
                  key("theta", KeyType::real, "PD theta > -alpha", 0.0),
                  required("n", KeyType::count, "number of particles N"),
                  key("x-grid", KeyType::real_list, "comma-separated thresholds in (0,1)",
                      json::array({0.5})),
                  key("replicates", KeyType::count, "weight replicates", 1000),
                  seed_key(),
                  entropy_key(),
                  output_key(),
                  format_key("csv")};
    m["constants"] = {required("alpha", KeyType::real, "PD alpha in (0,1)"),
                      key("theta", KeyType::real, "PD theta > -alpha", 0.0),
                      key("n", KeyType::count, "evaluate L_N at this N"),
                      key("gamma", KeyType::real, "moment order for Phi", 1.0),
                      output_key(),
                      format_key("json")};
    return m;
  }();
  return s;
}

[[noreturn]] void bad(const std::string& what) { throw ParameterError(what); }

double parse_real_text(const std::string& key, std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    bad("--" + key + ": expected a finite number, got '" + std::string(s) + "'");
  return v;
}

json parse_flag_text(const KeySpec& spec, const std::string& s) {
  switch (spec.type) {
    case KeyType::count:
    case KeyType::real:
      return parse_real_text(spec.name, s);
    case KeyType::beta:
      if (s == "inf" || s == "Inf" || s == "infinity") return "inf";
      return parse_real_text(spec.name, s);
    case KeyType::seed: {
      std::uint64_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        bad("--seed: expected an unsigned 64-bit integer, got '" + s + "'");
      return v;
    }
    case KeyType::real_list: {
      json arr = json::array();
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(parse_real_text(spec.name, item));
      return arr;
    }
    case KeyType::flag:
      return s == "true" || s == "1";
    case KeyType::choice:
    case KeyType::path:
      return s;
  }
  bad("unhandled key type");
}

// Canonical value for a key, whether it came from a flag or a file.
json canonical(const KeySpec& spec, const json& v) {
  const std::string where = "'" + spec.name + "'";
  switch (spec.type) {
    case KeyType::count: {
      double d = 0.0;
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number()) d = v.get<double>();
      else if (v.is_string()) d = parse_real_text(spec.name, v.get<std::string>());
      else bad(where + " must be a nonnegative integer");
      if (!(d >= 0.0) || d != std::floor(d) || d > 9007199254740992.0)
        bad(where + " must be a nonnegative integer");
      return static_cast<std::uint64_t>(d);
    }
    case KeyType::real:
      if (v.is_number()) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) bad(where + " must be finite");
        return d;
      }
      if (v.is_string()) return parse_real_text(spec.name, v.get<std::string>());
      bad(where + " must be a number");
    case KeyType::beta:
      if (v.is_string()) return parse_flag_text(spec, v.get<std::string>());
      if (v.is_number()) return v.get<double>();
      bad(where + " must be a number or \"inf\"");
    case KeyType::seed:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
      if (v.is_string()) return parse_flag_text(spec, v.get<std::string>());
      bad(where + " must be an unsigned 64-bit integer");
    case KeyType::choice: {
      if (!v.is_string()) bad(where + " must be a string");
      const auto s = v.get<std::string>();
      if (std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
        bad(where + " must be one of: " + all);
      }
      return s;
    }
    case KeyType::real_list: {
      if (v.is_string()) return parse_flag_text(spec, v.get<std::string>());
      if (!v.is_array() || v.empty()) bad(where + " must be a nonempty list of numbers");
      json arr = json::array();
      for (const auto& x : v) {
        if (!x.is_number()) bad(where + " must be a nonempty list of numbers");
        arr.push_back(x.get<double>());
      }
      return arr;
    }
    case KeyType::flag:
      if (!v.is_boolean()) bad(where + " must be true or false");
      return v;
    case KeyType::path:
      if (!v.is_string() || v.get<std::string>().empty()) bad(where + " must be a nonempty path");
      return v;
  }
  bad("unhandled key type");
}

// Cross-key rules that a flat schema cannot express.
void finish(const std::string& sub, json& v, const std::set<std::string>& given) {
  auto has = [&](const char* k) { return v.contains(k) && !v[k].is_null(); };
  auto reject = [&](std::initializer_list<const char*> keys, const std::string& why) {
    for (const char* k : keys)
      if (given.count(k)) bad("'" + std::string(k) + "' is not accepted " + why);
  };
  if (sub == "simulate" || sub == "speed") {
    const bool inf = v["beta"].is_string();
    if (!has("engine")) v["engine"] = inf ? "exponential_model" : "direct";
    if (v["engine"] == "exponential_model") {
      reject({"epsilon", "n-sticks"}, "with engine exponential_model");
      v.erase("epsilon");
      v.erase("n-sticks");
    } else if (v["engine"] == "pd_exact") {
      reject({"epsilon"}, "with engine pd_exact");
      v.erase("epsilon");
    } else {
      reject({"n-sticks"}, "with engine direct");
      v.erase("n-sticks");
    }
  } else if (sub == "rates") {
    if (v["measure"] == "beta" && !has("lambda")) bad("'lambda' is required with measure beta");
    if (v["measure"] == "kingman") reject({"lambda"}, "with measure kingman");
  } else if (sub == "coalescent") {
    if (has("measure")) {
      reject({"alpha", "theta", "n", "steps", "first-merger"}, "with --measure");
      if (v["measure"] == "beta" && !has("lambda")) bad("'lambda' is required with measure beta");
      if (v["measure"] == "kingman") reject({"lambda"}, "with measure kingman");
      for (const char* k : {"alpha", "theta", "n", "steps", "first-merger"}) v.erase(k);
    } else {
      reject({"lambda"}, "without --measure");
      if (!has("alpha") || !has("n")) bad("'alpha' and 'n' are required without --measure");
      if (!has("theta")) v["theta"] = 0.0;
      if (!has("steps")) v["steps"] = 1000000;
      if (!has("first-merger")) v["first-merger"] = false;
      v.erase("measure");
      v.erase("lambda");
    }
  }
  // Drop keys that stayed absent.
  for (auto it = v.begin(); it != v.end();) {
    if (it->is_null()) it = v.erase(it);
    else ++it;
  }
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// -------- accessors --------

std::uint64_t u64(const json& v, const char* k) { return v.at(k).get<std::uint64_t>(); }
std::size_t count(const json& v, const char* k) { return static_cast<std::size_t>(u64(v, k)); }
double real(const json& v, const char* k) { return v.at(k).get<double>(); }
std::string str(const json& v, const char* k) { return v.at(k).get<std::string>(); }
bool flag(const json& v, const char* k) { return v.contains(k) && v.at(k).get<bool>(); }

double beta_of(const json& v) {
  const auto& b = v.at("beta");
  return b.is_string() ? kInfiniteBeta : b.get<double>();
}

BRWConfig brw_config(const json& v) {
  BRWConfig c;
  c.n_particles = count(v, "n");
  c.beta = beta_of(v);
  c.engine = parse_engine(str(v, "engine"));
  c.variant = parse_variant(str(v, "variant"));
  if (v.contains("epsilon")) c.truncation_epsilon = real(v, "epsilon");
  if (v.contains("n-sticks")) c.n_sticks = count(v, "n-sticks");
  c.validate();
  return c;
}

PDParams pd_params(const json& v) {
  return PDParams(real(v, "alpha"), v.contains("theta") ? real(v, "theta") : 0.0);
}

bool wants_json(const json& v) { return str(v, "format") == "json"; }

json manifest(const ExperimentConfig& c, json fields) {
  json m;
  m["tool"] = "pdbrw";
  m["version"] = PDBRW_VERSION;
  m["subcommand"] = c.subcommand;
  m["config"] = c.to_json();
  m["fields"] = std::move(fields);
  return m;
}

json report_fields() {
  return {{"name", "estimator name"},
          {"params", "inputs of the estimator"},
          {"estimate", "point estimate"},
          {"std_error", "standard error"},
          {"n_samples", "samples behind the estimate"},
          {"ci95", "estimate -/+ 1.96 std_error"},
          {"reference", "analytic target or null"},
          {"elapsed_seconds", "wall time, null unless --timing"}};
}

std::string reports_document(const ExperimentConfig& c, std::vector<EstimatorReport> reports) {
  const bool timing = flag(c.values, "timing");
  for (auto& r : reports)
    if (!timing) r.elapsed_seconds = std::numeric_limits<double>::quiet_NaN();
  if (!wants_json(c.values)) {
    std::ostringstream os;
    write_reports_csv(os, reports);
    return os.str();
  }
  json doc;
  doc["MANIFEST"] = manifest(c, report_fields());
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(json::parse(report_to_json(r)));
  doc["reports"] = std::move(arr);
  return doc.dump() + "\n";
}

json report_summary(const std::vector<EstimatorReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j = json::parse(report_to_json(r));
    j.erase("params");
    j.erase("elapsed_seconds");
    arr.push_back(std::move(j));
  }
  return arr;
}

// -------- subcommands --------

// Requests above these sizes are refused up front (exit 3) instead of running
// for days or exhausting memory.
constexpr double kMaxWork = 1e13;        // random variates drawn
constexpr double kMaxStoredRows = 5e8;   // trajectory and genealogy rows kept

void check_budget(double work, double rows = 0.0) {
  if (work > kMaxWork)
    throw ResourceError("request needs about " + format_double(work) +
                        " random variates; cap is 1e13");
  if (rows > kMaxStoredRows)
    throw ResourceError("request stores about " + format_double(rows) +
                        " output rows; cap is 5e8");
}

double particles_per_step(const BRWConfig& c) {
  const double n = static_cast<double>(c.n_particles);
  if (c.engine == Engine::pd_exact) return std::max(n, static_cast<double>(c.n_sticks));
  return n;
}

struct Output {
  std::string document;
  std::vector<std::pair<std::string, std::string>> extra;
  json summary = json::object();
};

Output run_simulate(const ExperimentConfig& c) {
  const json& v = c.values;
  const BRWConfig cfg = brw_config(v);
  Rng rng = seed_stream(u64(v, "seed"), 0);
  RunOptions opt;
  opt.record_genealogy = v.contains("genealogy");
  const double steps = static_cast<double>(count(v, "steps"));
  check_budget(particles_per_step(cfg) * steps,
               opt.record_genealogy ? static_cast<double>(cfg.n_particles) * steps : steps);
  const RunResult r = run(cfg, count(v, "steps"), rng, opt);
  Output out;
  if (wants_json(v)) {
    json doc;
    doc["MANIFEST"] = manifest(c, {{"trajectory", "per generation: generation, x_eq, max_pos, min_pos"}});
    json g = json::array(), x = json::array(), hi = json::array(), lo = json::array();
    for (const auto& s : r.trajectory) {
      g.push_back(s.generation);
      x.push_back(s.x_eq);
      hi.push_back(s.max_pos);
      lo.push_back(s.min_pos);
    }
    doc["trajectory"] = {{"generation", g}, {"x_eq", x}, {"max_pos", hi}, {"min_pos", lo}};
    out.document = doc.dump() + "\n";
  } else {
    std::ostringstream os;
    write_trajectory_csv(os, r.trajectory);
    out.document = os.str();
  }
  if (opt.record_genealogy) {
    std::ostringstream os;
    write_genealogy_csv(os, r.genealogy);
    out.extra.emplace_back(str(v, "genealogy"), os.str());
  }
  const auto& last = r.trajectory.back();
  out.summary["final_x_eq"] = last.x_eq;
  out.summary["mean_increment"] = (last.x_eq - r.trajectory.front().x_eq) /
                                  static_cast<double>(r.trajectory.size() - 1);
  return out;
}

Output run_reports(const ExperimentConfig& c, std::vector<EstimatorReport> reports) {
  Output out;
  out.summary["reports"] = report_summary(reports);
  out.document = reports_document(c, std::move(reports));
  return out;
}

Output run_speed(const ExperimentConfig& c) {
  const json& v = c.values;
  const BRWConfig cfg = brw_config(v);
  check_budget(particles_per_step(cfg) * static_cast<double>(count(v, "steps")) *
               static_cast<double>(count(v, "replicates")));
  return run_reports(c, {estimate_speed(cfg, count(v, "steps"), count(v, "replicates"),
                                        u64(v, "seed"))});
}

Output run_cn(const ExperimentConfig& c) {
  const json& v = c.values;
  check_budget(static_cast<double>(count(v, "n")) * static_cast<double>(count(v, "replicates")));
  return run_reports(c, {estimate_cn(pd_params(v), count(v, "n"), count(v, "replicates"),
                                     parse_cn_mode(str(v, "mode")), u64(v, "seed"))});
}

Output run_pd_diagnostics(const ExperimentConfig& c) {
  const json& v = c.values;
  check_budget(static_cast<double>(count(v, "n-sticks")) *
               static_cast<double>(count(v, "replicates")));
  return run_reports(c, pd_diagnostics(pd_params(v), count(v, "n-sticks"),
                                       count(v, "replicates"), u64(v, "seed"),
                                       real(v, "gamma")));
}

LambdaMeasure measure_of(const json& v) {
  if (str(v, "measure") == "kingman") return LambdaMeasure::kingman();
  return LambdaMeasure::beta_family(real(v, "lambda"));
}

Output run_rates(const ExperimentConfig& c) {
  const json& v = c.values;
  const double bmax = static_cast<double>(count(v, "bmax"));
  check_budget(0.0, 0.5 * bmax * bmax);
  const RateTable t(count(v, "bmax"), measure_of(v));
  Output out;
  if (wants_json(v)) {
    json doc;
    doc["MANIFEST"] = manifest(c, {{"rates", "lambda_{b,k} for 2 <= k <= b <= bmax"}});
    json arr = json::array();
    for (std::size_t b = 2; b <= t.b_max(); ++b)
      for (std::size_t k = 2; k <= b; ++k) arr.push_back({{"b", b}, {"k", k}, {"rate", t.rate(b, k)}});
    doc["rates"] = std::move(arr);
    out.document = doc.dump() + "\n";
  } else {
    std::ostringstream os;
    write_rate_table_csv(os, t);
    out.document = os.str();
  }
  out.summary["max_recursion_error"] = t.max_recursion_error();
  return out;
}

Output run_coalescent(const ExperimentConfig& c) {
  const json& v = c.values;
  const std::size_t n = count(v, "n-lineages");
  const std::size_t reps = count(v, "replicates");
  const std::uint64_t seed = u64(v, "seed");
  detail::require(n >= 2 && n <= 64, "'n-lineages' must lie in [2, 64]");
  detail::require(reps >= 1, "'replicates' must be positive");
  std::vector<CoalescentTrajectory> trs(reps);
  std::optional<LambdaMeasure> reference;
  double time_scale = 1.0;  // generations -> Lambda-coalescent time
  if (v.contains("measure")) {
    reference = measure_of(v);
    parallel_for(reps, [&](std::size_t r) {
      Rng rng = seed_stream(seed, r);
      trs[r] = simulate_lambda_coalescent(n, *reference, rng);
    });
  } else {
    const PDParams p = pd_params(v);
    if (p.theta() < p.alpha())
      reference = LambdaMeasure::beta_family(1.0 + p.theta() / p.alpha());
    else
      reference = LambdaMeasure::kingman();
    const std::size_t big_n = count(v, "n");
    const std::size_t steps = count(v, "steps");
    const bool first = flag(v, "first-merger");
    check_budget(static_cast<double>(reps) *
                 (static_cast<double>(big_n) + static_cast<double>(steps) * static_cast<double>(n)));
    parallel_for(reps, [&](std::size_t r) {
      Rng rng = seed_stream(seed, r);
      trs[r] = simulate_multinomial_coalescent(p, big_n, n, rng, steps, first);
    });
    // Discrete generations are reported against t * c_N with c_N estimated
    // semi-analytically from an independent seed.
    time_scale = estimate_cn(p, big_n, std::max<std::size_t>(reps, 2), CnMode::semi_analytic,
                             mix64(seed))
                     .estimate;
  }
  const std::optional<MergerStatistics> stats =
      n <= 8 ? std::optional(merger_statistics(trs, n, &*reference)) : std::nullopt;
  Output out;
  if (wants_json(v)) {
    json doc;
    doc["MANIFEST"] = manifest(
        c, {{"merger_statistics",
             "first-merger sizes among n lineages; reference from the limiting Lambda-coalescent"},
            {"time_scale", "c_N estimate multiplying generations (1 for Lambda-coalescent runs)"}});
    doc["merger_statistics"] = stats ? json::parse(merger_statistics_to_json(*stats)) : json(nullptr);
    doc["time_scale"] = time_scale;
    out.document = doc.dump() + "\n";
  } else {
    std::ostringstream os;
    write_coalescent_csv(os, trs, time_scale);
    out.document = os.str();
  }
  if (stats) {
    json freq = json::object();
    for (std::size_t k = 2; k <= n; ++k) freq[std::to_string(k)] = stats->frequencies[k];
    out.summary["first_merger_frequencies"] = freq;
    out.summary["no_merger"] = stats->no_merger;
  }
  out.summary["time_scale"] = time_scale;
  return out;
}

Output run_tails(const ExperimentConfig& c) {
  const json& v = c.values;
  const auto grid = v.at("x-grid").get<std::vector<double>>();
  check_budget(static_cast<double>(count(v, "n")) * static_cast<double>(count(v, "replicates")));
  const auto curve =
      weight_tail_curve(pd_params(v), count(v, "n"), grid, count(v, "replicates"), u64(v, "seed"));
  Output out;
  if (wants_json(v)) {
    json doc;
    doc["MANIFEST"] = manifest(c, {{"tail", "x, L_N * P(theta_(1) > x) with std_error and ci95, reference"}});
    json arr = json::array();
    for (const auto& p : curve)
      arr.push_back({{"x", p.x},
                     {"scaled_tail", p.scaled_tail},
                     {"std_error", p.std_error},
                     {"ci95", {p.scaled_tail - 1.96 * p.std_error, p.scaled_tail + 1.96 * p.std_error}},
                     {"reference", p.reference}});
    doc["tail"] = std::move(arr);
    out.document = doc.dump() + "\n";
  } else {
    std::ostringstream os;
    write_tail_csv(os, curve);
    out.document = os.str();
  }
  json s = json::array();
  for (const auto& p : curve) s.push_back({{"x", p.x}, {"scaled_tail", p.scaled_tail}, {"reference", p.reference}});
  out.summary["tail"] = s;
  return out;
}

Output run_constants(const ExperimentConfig& c) {
  const json& v = c.values;
  const PDParams p = pd_params(v);
  const ScalingConstants sc = ScalingConstants::make(p);
  const double gamma = real(v, "gamma");
  std::vector<std::pair<std::string, double>> rows{
      {"lambda", sc.lambda},
      {"c_alpha_theta", sc.c_alpha_theta},
      {"psi_alpha", psi_alpha(p.alpha())},
      {"phi_gamma", phi_moment(p, gamma)},
      {"mittag_leffler_mean", mittag_leffler_moment(p.alpha(), 1.0)},
      {"tail_reference_half", tail_reference(p, 0.5)}};
  if (v.contains("n")) rows.emplace_back("L_N", sc.L(static_cast<double>(count(v, "n"))));
  Output out;
  json values = json::object();
  for (const auto& [k, x] : rows) values[k] = x;
  if (wants_json(v)) {
    json doc;
    doc["MANIFEST"] = manifest(
        c, {{"constants",
             "lambda = 1 + theta/alpha; c_alpha_theta; psi_alpha; phi_gamma = Phi(gamma); "
             "mittag_leffler_mean; tail_reference_half = f(0.5); L_N if n given"}});
    doc["constants"] = values;
    out.document = doc.dump() + "\n";
  } else {
    std::ostringstream os;
    os << "name,value\n";
    for (const auto& [k, x] : rows) os << k << ',' << format_double(x) << '\n';
    out.document = os.str();
  }
  out.summary["constants"] = values;
  return out;
}

void write_atomically(const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> staged, done;
  try {
    for (const auto& [path, body] : files) {
      fs::path tmp = path + ".tmp";
      staged.push_back(tmp);
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f << body;
      f.close();
      if (!f) throw std::runtime_error("cannot write " + path);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      fs::rename(staged[i], files[i].first);
      done.emplace_back(files[i].first);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : staged) fs::remove(p, ec);
    for (const auto& p : done) fs::remove(p, ec);
    throw;
  }
}

json error_line(int code, const std::string& msg) {
  return {{"status", "error"}, {"exit_code", code}, {"message", msg}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"simulate", "speed",          "cn",    "coalescent",
                                          "rates",    "pd-diagnostics", "tails", "constants"};
  return s;
}

const std::vector<KeySpec>& keys_for(const std::string& subcommand) {
  const auto it = schema().find(subcommand);
  if (it == schema().end()) bad("unknown subcommand '" + subcommand + "'");
  return it->second;
}

ExperimentConfig resolve_config(const std::string& subcommand, const json& file_values,
                                const std::map<std::string, std::string>& flags) {
  const auto& keys = keys_for(subcommand);
  if (!file_values.is_null() && !file_values.is_object()) bad("config file must hold a JSON object");
  auto spec_of = [&](const std::string& name) -> const KeySpec& {
    for (const auto& k : keys)
      if (k.name == name) return k;
    bad("'" + name + "' is not accepted by subcommand " + subcommand);
  };

  json merged = json::object();
  std::set<std::string> given;
  if (file_values.is_object()) {
    for (const auto& [k, val] : file_values.items()) {
      if (k == "subcommand") {
        if (val != subcommand) bad("config file is for subcommand " + val.dump());
        continue;
      }
      merged[k] = canonical(spec_of(k), val);
      given.insert(k);
    }
  }
  for (const auto& [k, s] : flags) {
    const KeySpec& spec = spec_of(k);
    merged[k] = canonical(spec, parse_flag_text(spec, s));
    given.insert(k);
  }

  ExperimentConfig c;
  c.subcommand = subcommand;
  for (const auto& spec : keys) {
    if (merged.contains(spec.name)) {
      c.values[spec.name] = merged[spec.name];
    } else if (spec.required) {
      bad("'" + spec.name + "' is required by subcommand " + subcommand);
    } else {
      c.values[spec.name] = spec.default_value;
    }
  }
  if (c.values.contains("seed") && flag(c.values, "entropy") && !given.count("seed"))
    c.values["seed"] = entropy_seed();
  finish(subcommand, c.values, given);
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  for (const auto& [k, v] : values.items()) j[k] = v;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object() || !j.contains("subcommand") || !j["subcommand"].is_string())
    bad("config must be a JSON object with a \"subcommand\" string");
  return resolve_config(j["subcommand"].get<std::string>(), j, {});
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  static const std::map<std::string, Output (*)(const ExperimentConfig&)> table{
      {"simulate", run_simulate}, {"speed", run_speed},
      {"cn", run_cn},             {"coalescent", run_coalescent},
      {"rates", run_rates},       {"pd-diagnostics", run_pd_diagnostics},
      {"tails", run_tails},       {"constants", run_constants}};
  const auto it = table.find(c.subcommand);
  if (it == table.end()) bad("unknown subcommand '" + c.subcommand + "'");
  Output o = it->second(c);

  ExperimentResult r;
  const std::string main_path = c.values.contains("output") ? str(c.values, "output") : "";
  r.files.emplace_back(main_path, std::move(o.document));
  for (auto& e : o.extra) r.files.push_back(std::move(e));
  r.summary["status"] = "ok";
  r.summary["subcommand"] = c.subcommand;
  if (c.values.contains("seed")) r.summary["seed"] = c.values["seed"];
  json outputs = json::array();
  for (const auto& [p, body] : r.files)
    if (!p.empty()) outputs.push_back(p);
  r.summary["outputs"] = outputs;
  for (auto& [k, val] : o.summary.items()) r.summary[k] = val;
  return r;
}

int execute(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentResult r = run_experiment(c);
    std::vector<std::pair<std::string, std::string>> to_disk;
    std::string to_stdout;
    for (auto& f : r.files) {
      if (f.first.empty()) to_stdout = std::move(f.second);
      else to_disk.push_back(std::move(f));
    }
    write_atomically(to_disk);
    r.summary["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!to_stdout.empty()) out << to_stdout;
    else out << r.summary.dump() << '\n';
    out.flush();
    return kOk;
  } catch (const ParameterError& e) {
    err << error_line(kInvalidConfig, e.what()).dump() << '\n';
    return kInvalidConfig;
  } catch (const ResourceError& e) {
    err << error_line(kResourceCap, e.what()).dump() << '\n';
    return kResourceCap;
  } catch (const std::exception& e) {
    err << error_line(kFailure, e.what()).dump() << '\n';
    return kFailure;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pdbrw: (N,beta)-branching random walk, Poisson-Dirichlet and coalescent experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PDBRW_VERSION);

  struct Bound {
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> opts;
    std::string config_path;
  };
  std::map<std::string, Bound> bound;
  static const std::map<std::string, std::string> about{
      {"simulate", "run one (N,beta)-BRW trajectory; optional genealogy CSV"},
      {"speed", "estimate the front speed v_{N,beta} from pooled x_eq increments"},
      {"cn", "estimate the pair-coalescence probability c_N from PD weights"},
      {"coalescent", "multinomial PD coalescent or Lambda-coalescent trajectories"},
      {"rates", "Lambda-coalescent merger rate table lambda_{b,k}"},
      {"pd-diagnostics", "stick-breaking martingale and series diagnostics"},
      {"tails", "scaled tail L_N P(theta_(1) > x) of the largest PD weight"},
      {"constants", "closed-form scaling constants for (alpha, theta)"}};
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    Bound& b = bound[name];
    for (const auto& k : keys_for(name)) {
      std::string flag_names = "--" + k.name;
      if (k.name == "steps") flag_names += ",--horizon";
      std::string help = k.help;
      if (!k.default_value.is_null()) help += " [default: " + k.default_value.dump() + "]";
      if (k.type == KeyType::flag)
        b.opts[k.name] = sub->add_flag(flag_names, b.flags[k.name], help);
      else
        b.opts[k.name] = sub->add_option(flag_names, b.text[k.name], help);
      if (k.required) b.opts[k.name]->description(help + " (required)");
    }
    sub->add_option("--config", b.config_path, "JSON file with flat keys mirroring the flags");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << error_line(kInvalidConfig, e.what()).dump() << '\n';
    return kInvalidConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Bound& b = bound[name];
  ExperimentConfig config;
  try {
    json file = nullptr;
    if (!b.config_path.empty()) {
      std::ifstream in(b.config_path);
      if (!in) bad("cannot read config file " + b.config_path);
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        bad("config file " + b.config_path + ": " + e.what());
      }
    }
    std::map<std::string, std::string> flags;
    for (const auto& [k, opt] : b.opts) {
      if (opt->count() == 0) continue;
      flags[k] = b.flags.count(k) ? (b.flags[k] ? "true" : "false") : b.text[k];
    }
    config = resolve_config(name, file, flags);
  } catch (const ParameterError& e) {
    err << error_line(kInvalidConfig, e.what()).dump() << '\n';
    return kInvalidConfig;
  }
  return execute(config, out, err);
}

}  // namespace pdbrw::cli
