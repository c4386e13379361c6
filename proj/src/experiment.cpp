#include "qiga/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "qiga/idx.hpp"

namespace qiga {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("spec key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("spec key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> csv_fields(const std::string& line) { return split(line, ','); }

json problem_json(const ProblemSpec& p) {
  return json{{"kind", to_string(p.kind)},
              {"length", p.length},
              {"knapsack_items", p.knapsack_items},
              {"knapsack_seed", p.knapsack_seed},
              {"images", p.images.string()},
              {"labels", p.labels.string()},
              {"train_samples", p.train_samples},
              {"fitness_samples", p.fitness_samples},
              {"dataset_seed", p.dataset_seed}};
}

ProblemSpec problem_from_json(const json& j) {
  ProblemSpec p;
  p.kind = problem_kind_from_string(j.at("kind").get<std::string>());
  p.length = j.at("length").get<std::size_t>();
  p.knapsack_items = j.at("knapsack_items").get<std::size_t>();
  p.knapsack_seed = j.at("knapsack_seed").get<std::uint64_t>();
  p.images = j.at("images").get<std::string>();
  p.labels = j.at("labels").get<std::string>();
  p.train_samples = j.at("train_samples").get<std::size_t>();
  p.fitness_samples = j.at("fitness_samples").get<std::size_t>();
  p.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  return p;
}

json engine_json(const EngineConfig& c) {
  json j{{"population_size", c.population_size},
         {"epochs", c.epochs},
         {"p_crossover", c.p_crossover},
         {"p_mutation", c.p_mutation},
         {"rotation_test_case", test_case_number(c.rotation_test_case)},
         {"theta_min", c.theta_min},
         {"theta_max", c.theta_max},
         {"boost_c", c.boost_c},
         {"selection",
          {{"mean_threshold", c.selection.mean_threshold},
           {"param_threshold", c.selection.param_threshold},
           {"env_epsilon", c.selection.env_epsilon},
           {"elitism_fraction", c.selection.elitism_fraction}}},
         {"level", {{"min", c.level.min_length}, {"max", c.level.max_length}, {"interval", c.level.interval}}},
         {"init_mode", to_string(c.init_mode)},
         {"blocks",
          {{"n_min", c.blocks.n_min},
           {"n_max", c.blocks.n_max},
           {"d", c.blocks.d},
           {"segment_length", c.blocks.segment_length},
           {"candidates", c.blocks.candidates}}},
         {"batches", {{"total_epochs", c.batches.total_epochs}, {"fitness_set_size", c.batches.fitness_set_size}}},
         {"target_score", c.target_score ? json(*c.target_score) : json(nullptr)},
         {"seed", c.seed}};
  return j;
}

EngineConfig engine_from_json(const json& j) {
  EngineConfig c;
  c.population_size = j.at("population_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.p_crossover = j.at("p_crossover").get<double>();
  c.p_mutation = j.at("p_mutation").get<double>();
  c.rotation_test_case = test_case_from_number(j.at("rotation_test_case").get<int>());
  c.theta_min = j.at("theta_min").get<double>();
  c.theta_max = j.at("theta_max").get<double>();
  c.boost_c = j.at("boost_c").get<double>();
  const auto& s = j.at("selection");
  c.selection.mean_threshold = s.at("mean_threshold").get<double>();
  c.selection.param_threshold = s.at("param_threshold").get<double>();
  c.selection.env_epsilon = s.at("env_epsilon").get<double>();
  c.selection.elitism_fraction = s.at("elitism_fraction").get<double>();
  const auto& l = j.at("level");
  c.level = LevelConfig{l.at("min").get<std::size_t>(), l.at("max").get<std::size_t>(),
                        l.at("interval").get<std::size_t>()};
  c.init_mode = init_mode_from_string(j.at("init_mode").get<std::string>());
  const auto& b = j.at("blocks");
  c.blocks.n_min = b.at("n_min").get<std::size_t>();
  c.blocks.n_max = b.at("n_max").get<std::size_t>();
  c.blocks.d = b.at("d").get<std::size_t>();
  c.blocks.segment_length = b.at("segment_length").get<std::size_t>();
  c.blocks.candidates = b.at("candidates").get<std::size_t>();
  const auto& bt = j.at("batches");
  c.batches.total_epochs = bt.at("total_epochs").get<std::size_t>();
  c.batches.fitness_set_size = bt.at("fitness_set_size").get<std::size_t>();
  if (!j.at("target_score").is_null()) c.target_score = j.at("target_score").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::vector<double> after_first(const std::vector<double>& v) {
  if (v.size() <= 1) return v;
  return {v.begin() + 1, v.end()};
}

Dataset load_feature_data(const ProblemSpec& spec) {
  const std::size_t total = spec.train_samples + spec.fitness_samples;
  Dataset all = spec.images.empty() ? make_synthetic_digits(total, spec.dataset_seed)
                                    : load_idx(spec.images, spec.labels, total);
  if (all.rows < total) {
    throw std::runtime_error("dataset " + spec.images.string() + " holds " + std::to_string(all.rows) +
                             " samples, " + std::to_string(total) + " requested");
  }
  return all;
}

}  // namespace

// ------------------------------------------------------------------ spec

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::OneMax: return "onemax";
    case ProblemKind::Knapsack: return "knapsack";
    case ProblemKind::FeatureSelection: return "feature-selection";
  }
  return "?";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  if (name == "onemax") return ProblemKind::OneMax;
  if (name == "knapsack") return ProblemKind::Knapsack;
  if (name == "feature-selection") return ProblemKind::FeatureSelection;
  throw std::invalid_argument("unknown problem '" + name + "' (expected onemax, knapsack or feature-selection)");
}

std::string ProblemSpec::id() const {
  switch (kind) {
    case ProblemKind::OneMax: return "onemax-" + std::to_string(length);
    case ProblemKind::Knapsack:
      return "knapsack-" + std::to_string(knapsack_items) + "-s" + std::to_string(knapsack_seed);
    case ProblemKind::FeatureSelection: {
      const std::string source = images.empty() ? "synthetic-s" + std::to_string(dataset_seed) : images.string();
      return "feature-selection-" + source + "-" + std::to_string(train_samples) + "-" +
             std::to_string(fitness_samples);
    }
  }
  return "?";
}

void ProblemSpec::validate() const {
  switch (kind) {
    case ProblemKind::OneMax:
      if (length < 1) throw std::invalid_argument("onemax length must be >= 1");
      break;
    case ProblemKind::Knapsack:
      if (knapsack_items < 1) throw std::invalid_argument("knapsack_items must be >= 1");
      break;
    case ProblemKind::FeatureSelection:
      if (images.empty() != labels.empty()) throw std::invalid_argument("images and labels must be given together");
      if (train_samples < 1 || fitness_samples < 1) {
        throw std::invalid_argument("train_samples and fitness_samples must be >= 1");
      }
      break;
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_u64("seeds", part));
      continue;
    }
    const auto lo = parse_u64("seeds", trim(part.substr(0, dots)));
    const auto hi = parse_u64("seeds", trim(part.substr(dots + 2)));
    if (hi < lo) throw std::invalid_argument("seed range '" + part + "' is empty");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw std::invalid_argument("seed list '" + text + "' is empty");
  return seeds;
}

ExperimentSpec ExperimentSpec::parse(const std::string& text) {
  ExperimentSpec spec;
  spec.algorithms = {Algorithm::GA, Algorithm::QIGA, Algorithm::DQIGA};
  spec.test_cases = {TestCase::T1, TestCase::T2, TestCase::T3};
  spec.seeds = {1};
  bool synthetic = false;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("spec line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    auto& o = spec.overrides;
    if (key == "algorithms") {
      spec.algorithms.clear();
      for (const auto& a : split(v, ',')) spec.algorithms.push_back(algorithm_from_string(a));
    } else if (key == "test_cases") {
      spec.test_cases.clear();
      for (const auto& t : split(v, ',')) spec.test_cases.push_back(test_case_from_number(static_cast<int>(parse_u64(key, t))));
    } else if (key == "seeds") {
      spec.seeds = parse_seed_list(v);
    } else if (key == "problem") {
      spec.problem.kind = problem_kind_from_string(v);
    } else if (key == "length") {
      spec.problem.length = parse_u64(key, v);
    } else if (key == "knapsack_items") {
      spec.problem.knapsack_items = parse_u64(key, v);
    } else if (key == "knapsack_seed") {
      spec.problem.knapsack_seed = parse_u64(key, v);
    } else if (key == "images") {
      spec.problem.images = v;
    } else if (key == "labels") {
      spec.problem.labels = v;
    } else if (key == "dataset") {
      if (v != "synthetic") throw std::invalid_argument("spec key 'dataset': only 'synthetic' is supported");
      synthetic = true;
    } else if (key == "train_samples") {
      spec.problem.train_samples = parse_u64(key, v);
    } else if (key == "fitness_samples") {
      spec.problem.fitness_samples = parse_u64(key, v);
    } else if (key == "dataset_seed") {
      spec.problem.dataset_seed = parse_u64(key, v);
    } else if (key == "out") {
      spec.out_dir = v;
    } else if (key == "population_size") {
      o.population_size = parse_u64(key, v);
    } else if (key == "epochs") {
      o.epochs = parse_u64(key, v);
    } else if (key == "boost_c") {
      o.boost_c = parse_double(key, v);
    } else if (key == "mean_threshold") {
      o.mean_threshold = parse_double(key, v);
    } else if (key == "param_threshold") {
      o.param_threshold = parse_double(key, v);
    } else if (key == "env_epsilon") {
      o.env_epsilon = parse_double(key, v);
    } else if (key == "elitism_fraction") {
      o.elitism_fraction = parse_double(key, v);
    } else if (key == "level_min") {
      o.level_min = parse_u64(key, v);
    } else if (key == "level_max") {
      o.level_max = parse_u64(key, v);
    } else if (key == "level_interval") {
      o.level_interval = parse_u64(key, v);
    } else if (key == "init_mode") {
      o.init_mode = init_mode_from_string(v);
    } else if (key == "total_epochs") {
      o.total_epochs = parse_u64(key, v);
    } else {
      throw std::invalid_argument("spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (synthetic && !spec.problem.images.empty()) {
    throw std::invalid_argument("spec: dataset = synthetic conflicts with images/labels");
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_file(const fs::path& path) { return parse(read_file(path)); }

void ExperimentSpec::validate() const {
  if (algorithms.empty()) throw std::invalid_argument("spec: algorithm set is empty");
  if (test_cases.empty()) throw std::invalid_argument("spec: test case set is empty");
  if (seeds.empty()) throw std::invalid_argument("spec: seed list is empty");
  problem.validate();
  const bool any_level = overrides.level_min || overrides.level_max || overrides.level_interval;
  const bool all_level = overrides.level_min && overrides.level_max && overrides.level_interval;
  if (any_level && !all_level) {
    throw std::invalid_argument("spec: level_min, level_max and level_interval must be given together");
  }
}

// ------------------------------------------------------------------ runs

std::string RunSpec::directory_name() const {
  return to_string(algorithm) + "_t" + std::to_string(test_case_number(test_case)) + "_s" + std::to_string(seed);
}

std::string RunSpec::to_json() const {
  json j{{"format", "qiga-manifest-1"},
         {"algorithm", to_string(algorithm)},
         {"test_case", test_case_number(test_case)},
         {"seed", seed},
         {"problem", problem_json(problem)},
         {"engine", engine_json(engine)}};
  return j.dump(2) + "\n";
}

RunSpec RunSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "qiga-manifest-1") throw std::invalid_argument("not a qiga run manifest");
  RunSpec r;
  r.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  r.test_case = test_case_from_number(j.at("test_case").get<int>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.problem = problem_from_json(j.at("problem"));
  r.engine = engine_from_json(j.at("engine"));
  return r;
}

EngineConfig resolve_engine(TestCase tc, std::uint64_t seed, const EngineOverrides& o, const Problem& problem) {
  EngineConfig c = EngineConfig::for_test_case(tc);
  if (o.population_size) c.population_size = *o.population_size;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.boost_c) c.boost_c = *o.boost_c;
  if (o.mean_threshold) c.selection.mean_threshold = *o.mean_threshold;
  if (o.param_threshold) c.selection.param_threshold = *o.param_threshold;
  if (o.env_epsilon) c.selection.env_epsilon = *o.env_epsilon;
  if (o.elitism_fraction) c.selection.elitism_fraction = *o.elitism_fraction;
  if (o.level_min) c.level = LevelConfig{*o.level_min, *o.level_max, *o.level_interval};
  if (o.init_mode) c.init_mode = *o.init_mode;
  if (o.total_epochs) c.batches.total_epochs = *o.total_epochs;
  c.batches.fitness_set_size = problem.evaluation_set_size();
  c.seed = seed;
  c.validate();
  return c;
}

// ------------------------------------------------------------------ oracle

OracleValues compute_oracle(const ProblemSpec& spec) {
  spec.validate();
  OracleValues v;
  if (spec.kind == ProblemKind::Knapsack) {
    v.knapsack_optimum = knapsack_dp_oracle(make_knapsack_instance(spec.knapsack_items, spec.knapsack_seed));
  } else if (spec.kind == ProblemKind::FeatureSelection) {
    const Dataset all = load_feature_data(spec);
    const FeatureSelectionProblem p(all.slice(0, spec.train_samples),
                                    all.slice(spec.train_samples, spec.train_samples + spec.fitness_samples));
    v.centroid_accuracy = 1.0 - p.full_feature_error();
  }
  return v;
}

std::map<std::string, OracleValues> load_oracle_cache(const fs::path& dir) {
  std::map<std::string, OracleValues> out;
  const fs::path file = dir / "oracle.json";
  if (!fs::exists(file)) return out;
  const json j = json::parse(read_file(file));
  for (const auto& [id, entry] : j.items()) {
    OracleValues v;
    if (entry.contains("knapsack_optimum")) v.knapsack_optimum = entry.at("knapsack_optimum").get<std::int64_t>();
    if (entry.contains("centroid_accuracy")) v.centroid_accuracy = entry.at("centroid_accuracy").get<double>();
    out.emplace(id, v);
  }
  return out;
}

void store_oracle(const fs::path& dir, const ProblemSpec& spec, const OracleValues& values) {
  fs::create_directories(dir);
  const fs::path file = dir / "oracle.json";
  json j = fs::exists(file) ? json::parse(read_file(file)) : json::object();
  json entry = json::object();
  if (values.knapsack_optimum) entry["knapsack_optimum"] = *values.knapsack_optimum;
  if (values.centroid_accuracy) entry["centroid_accuracy"] = *values.centroid_accuracy;
  j[spec.id()] = entry;
  write_file(file, j.dump(2) + "\n");
}

std::unique_ptr<Problem> build_problem(const ProblemSpec& spec, const std::map<std::string, OracleValues>& cache) {
  spec.validate();
  switch (spec.kind) {
    case ProblemKind::OneMax: return std::make_unique<OneMaxProblem>(spec.length);
    case ProblemKind::Knapsack: {
      auto inst = make_knapsack_instance(spec.knapsack_items, spec.knapsack_seed);
      std::optional<std::int64_t> optimum;
      if (const auto it = cache.find(spec.id()); it != cache.end()) optimum = it->second.knapsack_optimum;
      if (!optimum) optimum = knapsack_dp_oracle(inst);
      return std::make_unique<KnapsackProblem>(std::move(inst), optimum);
    }
    case ProblemKind::FeatureSelection: {
      const Dataset all = load_feature_data(spec);
      return std::make_unique<FeatureSelectionProblem>(
          all.slice(0, spec.train_samples),
          all.slice(spec.train_samples, spec.train_samples + spec.fitness_samples));
    }
  }
  throw std::invalid_argument("unknown problem kind");
}

// ------------------------------------------------------------------ outputs

TimingStats timing_stats(std::span<const double> durations) {
  if (durations.empty()) throw std::invalid_argument("timing_stats: empty duration list");
  const auto [lo, hi] = std::minmax_element(durations.begin(), durations.end());
  const double mean = std::accumulate(durations.begin(), durations.end(), 0.0) / static_cast<double>(durations.size());
  // Guard the ordering against rounding in the mean.
  return TimingStats{*lo, *hi, std::clamp(mean, *lo, *hi)};
}

void write_run_outputs(const fs::path& dir, const RunSpec& spec, const RunResult& result) {
  fs::create_directories(dir);

  std::string gens = std::string(kGenerationsHeader) + "\n";
  for (std::size_t g = 0; g < result.best_score.size(); ++g) {
    gens += std::to_string(g) + "," + fixed(result.best_score[g], 10) + "," + fixed(result.avg_score[g], 10) + "\n";
  }
  write_file(dir / "generations.csv", gens);

  json levels = json::array();
  for (const auto& l : result.levels) {
    levels.push_back({{"level", l.level},
                      {"length", l.length},
                      {"generations", l.generations},
                      {"best_fit", l.best_score_at_end}});
  }
  json summary{{"problem", spec.problem.id()},
               {"algorithm", to_string(spec.algorithm)},
               {"test_case", test_case_number(spec.test_case)},
               {"seed", spec.seed},
               {"best_fit", result.best_score.empty() ? 0.0 : result.best_score.back()},
               {"avg_fit", result.avg_score.empty() ? 0.0 : result.avg_score.back()},
               {"accuracy", result.accuracy},
               {"loss", result.loss},
               {"best_std_error", result.best.fitness ? result.best.fitness->std_error : 0.0},
               {"selected_genes", result.best.fitness ? result.best.fitness->param_count : 0},
               {"encoding_length", result.best.phenotype.size()},
               {"generations", result.best_score.size()},
               {"evaluations", result.evaluations},
               {"optimum_generation",
                result.optimum_generation ? json(*result.optimum_generation) : json(nullptr)},
               {"levels", levels}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  std::string timing = std::string(kTimingHeader) + "\n";
  const std::pair<const char*, const std::vector<double>*> phases[] = {
      {"rotation", &result.phase_seconds.rotation},
      {"mutation", &result.phase_seconds.mutation},
      {"crossover", &result.phase_seconds.crossover}};
  for (const auto& [name, values] : phases) {
    const auto sample = after_first(*values);
    const TimingStats t = sample.empty() ? TimingStats{} : timing_stats(sample);
    timing += std::string(name) + "," + fixed(t.optimal, 6) + "," + fixed(t.worst, 6) + "," + fixed(t.average, 6) + "\n";
  }
  write_file(dir / "timing.csv", timing);

  write_file(dir / "manifest.json", spec.to_json());
}

RunResult execute_run(const RunSpec& spec, const Problem& problem, const fs::path& out) {
  RunResult result = run_algorithm(spec.algorithm, spec.engine, problem);
  write_run_outputs(out / spec.directory_name(), spec, result);
  return result;
}

ExperimentSummary run_experiment(const ExperimentSpec& spec, std::size_t workers) {
  spec.validate();
  const fs::path out = spec.out_dir.empty() ? default_output_root() : spec.out_dir;
  fs::create_directories(out);
  const auto problem = build_problem(spec.problem, load_oracle_cache(out));

  std::vector<RunSpec> runs;
  for (const auto alg : spec.algorithms) {
    for (const auto tc : spec.test_cases) {
      for (const auto seed : spec.seeds) {
        runs.push_back(RunSpec{alg, tc, seed, spec.problem, resolve_engine(tc, seed, spec.overrides, *problem)});
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        execute_run(runs[i], *problem, out);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, runs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ExperimentSummary summary;
  for (const auto& r : runs) summary.run_dirs.push_back(out / r.directory_name());
  return summary;
}

fs::path rerun_manifest(const fs::path& manifest, const fs::path& out) {
  const RunSpec spec = RunSpec::from_json(read_file(manifest));
  const auto problem = build_problem(spec.problem, load_oracle_cache(out));
  execute_run(spec, *problem, out);
  return out / spec.directory_name();
}

fs::path default_output_root() {
  if (const char* env = std::getenv("QIGA_OUT_DIR"); env && *env) return env;
  return "runs";
}

// ------------------------------------------------------------------ report

void write_report(const fs::path& root, const fs::path& out) {
  using Key = std::tuple<std::string, std::string, int>;
  struct Acc {
    std::vector<double> best, avg, accuracy, loss;
    std::map<std::string, std::vector<TimingStats>> timing;
  };
  std::map<Key, Acc> groups;

  std::vector<fs::path> dirs;
  if (fs::exists(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "summary.json") dirs.push_back(entry.path().parent_path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw std::runtime_error("report: no run directories below " + root.string());

  for (const auto& dir : dirs) {
    const json s = json::parse(read_file(dir / "summary.json"));
    Acc& acc = groups[Key{s.at("problem").get<std::string>(), s.at("algorithm").get<std::string>(),
                          s.at("test_case").get<int>()}];
    acc.best.push_back(s.at("best_fit").get<double>());
    acc.avg.push_back(s.at("avg_fit").get<double>());
    acc.accuracy.push_back(s.at("accuracy").get<double>());
    acc.loss.push_back(s.at("loss").get<double>());

    std::istringstream timing(read_file(dir / "timing.csv"));
    std::string line;
    std::getline(timing, line);
    if (trim(line) != kTimingHeader) throw std::runtime_error("report: bad timing header in " + dir.string());
    while (std::getline(timing, line)) {
      const auto f = csv_fields(line);
      if (f.empty()) continue;
      if (f.size() != 4) throw std::runtime_error("report: malformed timing row in " + dir.string());
      acc.timing[f[0]].push_back(TimingStats{parse_double("optimal", f[1]), parse_double("worst", f[2]),
                                             parse_double("average", f[3])});
    }
  }

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::string t6 = std::string(kTable6Header) + "\n";
  std::string t7 = std::string(kTable7Header) + "\n";
  std::string t8 = std::string(kTable8Header) + "\n";
  for (const auto& [key, acc] : groups) {
    const auto& [problem, algorithm, tc] = key;
    const std::string prefix = problem + "," + algorithm + "," + std::to_string(tc) + ",";
    t6 += prefix + fixed(mean(acc.best), 10) + "," + fixed(mean(acc.avg), 10) + "\n";
    t7 += prefix + fixed(mean(acc.accuracy), 10) + "," + fixed(mean(acc.loss), 10) + "\n";
    for (const char* phase : {"rotation", "mutation", "crossover"}) {
      const auto it = acc.timing.find(phase);
      if (it == acc.timing.end()) continue;
      double lo = it->second.front().optimal;
      double hi = it->second.front().worst;
      double sum = 0.0;
      for (const auto& t : it->second) {
        lo = std::min(lo, t.optimal);
        hi = std::max(hi, t.worst);
        sum += t.average;
      }
      const double avg = std::clamp(sum / static_cast<double>(it->second.size()), lo, hi);
      t8 += prefix + phase + "," + fixed(lo, 6) + "," + fixed(hi, 6) + "," + fixed(avg, 6) + "\n";
    }
  }
  fs::create_directories(out);
  write_file(out / "table6.csv", t6);
  write_file(out / "table7.csv", t7);
  write_file(out / "table8.csv", t8);
}

}  // namespace qiga
