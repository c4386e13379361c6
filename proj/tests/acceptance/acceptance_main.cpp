// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 when every failing criterion is listed in --known-failures
// (each such line is still printed as FAIL), 1 otherwise.

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qiga/engine.hpp"
#include "qiga/experiment.hpp"
#include "qiga/fitness.hpp"
#include "qiga/idx.hpp"
#include "qiga/operators.hpp"
#include "qiga/qubit.hpp"
#include "qiga/rng.hpp"
#include "qiga/rotation.hpp"

namespace fs = std::filesystem;
using namespace qiga;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::optional<double> limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("qiga-acceptance-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    rows.push_back(std::move(cols));
  }
  return rows;
}

EngineConfig config(TestCase tc, std::uint64_t seed) {
  EngineConfig c = EngineConfig::for_test_case(tc);
  c.seed = seed;
  return c;
}

// ------------------------------------------------------------------ 1

Outcome normalization_suite() {
  const OneMaxProblem problem(64);
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  RunHooks hooks;
  hooks.on_population = [&](std::string_view, std::span<const Individual> inds) {
    for (const auto& ind : inds) {
      for (const auto& q : ind.genotype.qubits()) {
        const double err = std::abs(q.alpha() * q.alpha() + q.beta() * q.beta() - 1.0);
        worst = std::max(worst, err);
        violations += err > 1e-9;
        ++checked;
      }
    }
  };
  const auto cfg = config(TestCase::T1, 1);
  (void)run_qiga(cfg, problem, &hooks);
  (void)run_dqiga(cfg, problem, &hooks);
  return {violations == 0 && checked > 0,
          fmt("%zu qubit checks, %zu violations, max |a^2+b^2-1| = %.2e", checked, violations, worst)};
}

// ------------------------------------------------------------------ 2

Outcome rotation_algebra() {
  Rng rng(2);
  double ortho = 0.0;
  double comp = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double theta = rng.uniform(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const Mat2 m = rotation_matrix(theta);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double v = m[0][r] * m[0][c] + m[1][r] * m[1][c];
        ortho = std::max(ortho, std::abs(v - (r == c ? 1.0 : 0.0)));
      }
    }
    const Qubit q = Qubit::from_angle(rng.uniform(0.3, 1.27));
    const double a = rng.uniform(-0.1, 0.1);
    const double b = rng.uniform(-0.1, 0.1);
    const Qubit two = apply_rotation(apply_rotation(q, a), b);
    const Qubit one = apply_rotation(q, a + b);
    comp = std::max({comp, std::abs(two.alpha() - one.alpha()), std::abs(two.beta() - one.beta())});
  }
  bool endpoints = true;
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    const auto p = RotationPolicy::for_test_case(tc);
    for (std::size_t reps : {1u, 7u, 100u}) {
      endpoints = endpoints && annealed_cap(p, 0, reps) == p.theta_max && annealed_cap(p, reps, reps) == p.theta_min;
    }
  }
  return {ortho <= 1e-12 && comp <= 1e-9 && endpoints,
          fmt("orthogonality %.2e, composition %.2e, cap endpoints %s", ortho, comp, endpoints ? "exact" : "WRONG")};
}

// ------------------------------------------------------------------ 3

Outcome schedule_closed_forms() {
  const auto big = level_schedule(1, 784, 1, 1000);
  bool ok = big.level_max == 784 && big.lengths.size() == 784 && big.lengths.back() == 784;
  Rng rng(3);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t lo = 1 + rng.below(50);
    const std::size_t interval = 1 + rng.below(10);
    const std::size_t levels = 1 + rng.below(30);
    const std::size_t hi = lo + (levels - 1) * interval;
    const std::size_t m = levels + rng.below(5000);
    const auto s = level_schedule(lo, hi, interval, m);
    const auto sum = std::accumulate(s.repetitions.begin(), s.repetitions.end(), std::size_t{0});
    const bool sorted = std::is_sorted(s.repetitions.begin(), s.repetitions.end());
    bad += !(s.level_max == levels && sum == m && sorted);
  }
  ok = ok && bad == 0;
  return {ok, fmt("(1,784,1) -> %zu levels; %d/200 random schedules violate sum or order", big.level_max, bad)};
}

// ------------------------------------------------------------------ 4

Outcome boost_oracle() {
  const Qubit q = boost_best(new_qubit(0.6, 0.8), 1, 0.5);
  const double ea = std::abs(q.alpha() - 0.3);
  const double eb = std::abs(q.beta() - std::sqrt(0.91));
  return {ea <= 1e-12 && eb <= 1e-12, fmt("(%.15f, %.15f), errors %.1e / %.1e", q.alpha(), q.beta(), ea, eb)};
}

// ------------------------------------------------------------------ 5

Outcome opposition_involution() {
  Rng rng(5);
  double worst = 0.0;
  int arg_mismatch = 0;
  int distinct_lists = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> s(2 + rng.below(40));
    for (auto& x : s) x = rng.uniform(-5.0, 5.0);
    std::vector<double> r = s;
    reflect_scores(r);
    std::vector<double> rr = r;
    reflect_scores(rr);
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(rr[i] - s[i]));
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
    ++distinct_lists;
    const auto amax = std::max_element(r.begin(), r.end()) - r.begin();
    const auto amin = std::min_element(s.begin(), s.end()) - s.begin();
    arg_mismatch += amax != amin;
  }
  return {worst <= 1e-12 && arg_mismatch == 0,
          fmt("max double-reflection error %.2e; argmax/argmin mismatches %d of %d", worst, arg_mismatch,
              distinct_lists)};
}

// ------------------------------------------------------------------ 6

Outcome knapsack_oracle() {
  int good = 0;
  int total = 0;
  double worst = 1.0;
  for (std::uint64_t inst = 1; inst <= 50; ++inst) {
    const auto ki = make_knapsack_instance(20, inst);
    const auto opt = knapsack_dp_oracle(ki);
    const KnapsackProblem problem(ki, opt);
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      const auto r = run_qiga(config(TestCase::T1, seed), problem);
      const auto value = knapsack_value(r.best.phenotype.padded_to(20), ki);
      const double ratio = opt > 0 ? static_cast<double>(value) / static_cast<double>(opt) : 1.0;
      worst = std::min(worst, ratio);
      good += ratio >= 0.98;
      ++total;
    }
  }
  const double frac = static_cast<double>(good) / total;
  return {frac >= 0.9, fmt("%d/%d (instance, seed) pairs >= 0.98 x DP optimum (%.0f%%), worst ratio %.4f", good,
                           total, 100.0 * frac, worst)};
}

// ------------------------------------------------------------------ 7

Outcome onemax_convergence() {
  const OneMaxProblem problem(32);
  int qiga_hits = 0;
  int ga_hits = 0;
  double qiga_gen = 0.0;
  double ga_gen = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto q = run_qiga(config(TestCase::T1, seed), problem);
    const auto g = run_classical_ga(config(TestCase::T1, seed), problem);
    if (q.optimum_generation) {
      ++qiga_hits;
      qiga_gen += static_cast<double>(*q.optimum_generation);
    }
    if (g.optimum_generation) {
      ++ga_hits;
      ga_gen += static_cast<double>(*g.optimum_generation);
    }
  }
  const double qm = qiga_hits ? qiga_gen / qiga_hits : 0.0;
  const double gm = ga_hits ? ga_gen / ga_hits : 0.0;
  const bool ordering = ga_hits < qiga_hits || (ga_hits == qiga_hits && gm > qm);
  return {qiga_hits >= 19 && ordering,
          fmt("QIGA %d/20 (mean generation to optimum %.1f); GA %d/20 (mean %.1f)", qiga_hits, qm, ga_hits, gm)};
}

// ------------------------------------------------------------------ 8

double sign_test_p(int wins, int losses) {
  // One-sided P(X >= wins), X ~ Binomial(wins + losses, 1/2).
  const int n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) - n * std::log(2.0));
  return std::min(1.0, p);
}

struct TrendStats {
  double mean[2][3] = {};  // [problem][algorithm]
  int wins = 0;
  int losses = 0;
};

TrendStats three_way(TestCase tc) {
  TrendStats st;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (int prob = 0; prob < 2; ++prob) {
      std::unique_ptr<Problem> p;
      if (prob == 0) {
        p = std::make_unique<OneMaxProblem>(64);
      } else {
        auto ki = make_knapsack_instance(20, seed);
        const auto opt = knapsack_dp_oracle(ki);
        p = std::make_unique<KnapsackProblem>(std::move(ki), opt);
      }
      double best[3];
      for (int a = 0; a < 3; ++a) {
        best[a] = run_algorithm(static_cast<Algorithm>(a), config(tc, seed), *p).best_score.back();
        st.mean[prob][a] += best[a] / 20.0;
      }
      if (best[2] > best[0] + 1e-12) ++st.wins;
      if (best[2] < best[0] - 1e-12) ++st.losses;
    }
  }
  return st;
}

Outcome three_way_trend() {
  const char* names[2] = {"onemax-64", "knapsack-20"};
  std::string detail;
  bool pass = false;
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    const auto st = three_way(tc);
    bool order = true;
    std::string part = fmt("T%d:", test_case_number(tc));
    for (int prob = 0; prob < 2; ++prob) {
      const auto& m = st.mean[prob];
      order = order && m[2] >= m[1] - 1e-12 && m[1] >= m[0] - 1e-12;
      part += fmt(" %s GA %.4f QIGA %.4f D-QIGA %.4f;", names[prob], m[0], m[1], m[2]);
    }
    const double p = sign_test_p(st.wins, st.losses);
    part += fmt(" D-QIGA vs GA wins/losses %d/%d, p = %.3f", st.wins, st.losses, p);
    // The default test case decides; the others are reported for context.
    if (tc == TestCase::T1) {
      pass = order && p < 0.05;
      part += order ? " [order holds]" : " [order violated]";
    }
    detail += (detail.empty() ? "" : "\n       ") + part;
  }
  return {pass, detail};
}

// ------------------------------------------------------------------ 9

Outcome feature_selection_sanity() {
  std::string source = "synthetic";
  Dataset all;
  if (const char* dir = std::getenv("QIGA_MNIST_DIR")) {
    const fs::path d(dir);
    if (fs::exists(d / "train-images-idx3-ubyte") && fs::exists(d / "train-labels-idx1-ubyte")) {
      all = load_idx(d / "train-images-idx3-ubyte", d / "train-labels-idx1-ubyte", 1500);
      source = "MNIST " + d.string();
    }
  }
  if (all.rows == 0) all = make_synthetic_digits(1500, 7);
  const FeatureSelectionProblem problem(all.slice(0, 1000), all.slice(1000, 1500));
  const double baseline = 1.0 - problem.full_feature_error();
  const std::size_t limit = static_cast<std::size_t>(0.6 * static_cast<double>(problem.encoding_length()));
  int good = 0;
  double acc_min = 1.0;
  double acc_max = 0.0;
  std::size_t sel_min = problem.encoding_length();
  std::size_t sel_max = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cfg = config(TestCase::T3, seed);
    cfg.batches.fitness_set_size = problem.evaluation_set_size();
    const auto r = run_dqiga(cfg, problem);
    const std::size_t selected = r.best.phenotype.popcount();
    acc_min = std::min(acc_min, r.accuracy);
    acc_max = std::max(acc_max, r.accuracy);
    sel_min = std::min(sel_min, selected);
    sel_max = std::max(sel_max, selected);
    good += r.accuracy >= baseline - 0.02 && selected <= limit;
  }
  return {good >= 8, fmt("%s 1000/500: baseline %.4f; D-QIGA accuracy %.4f..%.4f, features %zu..%zu (limit %zu); "
                         "%d/10 seeds pass",
                         source.c_str(), baseline, acc_min, acc_max, sel_min, sel_max, limit, good)};
}

// ------------------------------------------------------------------ 10

double median_seconds(Algorithm a, std::size_t population, std::size_t length) {
  std::vector<double> xs;
  const OneMaxProblem problem(length);
  for (std::uint64_t r = 0; r < 7; ++r) {
    auto cfg = config(TestCase::T1, r + 1);
    cfg.population_size = population;
    const auto t0 = std::chrono::steady_clock::now();
    (void)run_algorithm(a, cfg, problem);
    xs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

Outcome complexity_scaling() {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  bool ok = true;
  std::string detail;
  for (auto a : {Algorithm::QIGA, Algorithm::DQIGA}) {
    const double base = median_seconds(a, 50, 64);
    const double pop = median_seconds(a, 100, 64) / base;
    const double len = median_seconds(a, 50, 128) / base;
    ok = ok && pop >= 1.6 && pop <= 2.6 && len >= 1.6 && len <= 2.6;
    detail += fmt("%s%s P 50->100 x%.2f, length 64->128 x%.2f", detail.empty() ? "" : "; ", to_string(a).c_str(),
                  pop, len);
  }
  omp_set_num_threads(saved);
  return {ok, detail + " (single thread, median of 7)"};
}

// ------------------------------------------------------------------ 11

Outcome determinism() {
  ScratchDir dir("determinism");
  std::size_t runs = 0;
  std::size_t mismatches = 0;
  for (const char* text : {"problem = onemax\nlength = 32\nseeds = 1..2\n",
                           "problem = knapsack\nknapsack_items = 20\nknapsack_seed = 3\nseeds = 4\n"}) {
    auto spec = ExperimentSpec::parse(text);
    spec.out_dir = dir.path() / "first";
    const auto summary = run_experiment(spec, 2);
    for (const auto& run : summary.run_dirs) {
      const fs::path replay = rerun_manifest(run / "manifest.json", dir.path() / "replay");
      for (const char* f : {"generations.csv", "summary.json", "manifest.json"}) {
        mismatches += slurp(run / f) != slurp(replay / f);
      }
      ++runs;
    }
  }
  return {runs > 0 && mismatches == 0,
          fmt("%zu runs replayed from manifest.json; %zu of %zu files differ (generations.csv, summary.json, "
              "manifest.json)",
              runs, mismatches, 3 * runs)};
}

// ------------------------------------------------------------------ 12

bool numeric(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

Outcome table_shapes() {
  ScratchDir dir("report");
  for (const char* text : {"problem = onemax\nlength = 32\nseeds = 1..2\nepochs = 40\n",
                           "problem = knapsack\nknapsack_items = 20\nseeds = 1..2\nepochs = 40\n"}) {
    auto spec = ExperimentSpec::parse(text);
    spec.out_dir = dir.path() / "runs" / (std::string(text).find("onemax") != std::string::npos ? "a" : "b");
    (void)run_experiment(spec, 2);
  }
  write_report(dir.path() / "runs", dir.path() / "out");
  std::vector<std::string> problems;
  std::string issues;
  auto check = [&](const char* file, const char* header, std::size_t numeric_from, std::size_t rows_expected,
                   std::size_t width) {
    const auto rows = read_csv(dir.path() / "out" / file);
    std::string h;
    if (!rows.empty()) {
      for (std::size_t i = 0; i < rows[0].size(); ++i) h += (i ? "," : "") + rows[0][i];
    }
    if (h != header) issues += fmt(" %s header '%s';", file, h.c_str());
    if (rows.size() != rows_expected + 1) issues += fmt(" %s has %zu rows;", file, rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != width) {
        issues += fmt(" %s row %zu width %zu;", file, r, rows[r].size());
        continue;
      }
      for (std::size_t c = numeric_from; c < width; ++c) {
        if (!numeric(rows[r][c])) issues += fmt(" %s row %zu col %zu not numeric;", file, r, c);
      }
    }
    return rows;
  };
  // 2 problems x 3 algorithms x 3 test cases.
  const std::size_t groups = 2 * 3 * 3;
  check("table6.csv", kTable6Header, 3, groups, 5);
  check("table7.csv", kTable7Header, 3, groups, 5);
  const auto t8 = check("table8.csv", kTable8Header, 4, groups * 3, 7);
  for (std::size_t r = 1; r < t8.size(); ++r) {
    if (t8[r].size() != 7) continue;
    const std::set<std::string> phases{"rotation", "mutation", "crossover"};
    if (!phases.count(t8[r][3])) issues += fmt(" table8 row %zu phase '%s';", r, t8[r][3].c_str());
    const double lo = std::stod(t8[r][4]);
    const double hi = std::stod(t8[r][5]);
    const double avg = std::stod(t8[r][6]);
    if (!(lo <= avg && avg <= hi)) issues += fmt(" table8 row %zu violates optimal <= average <= worst;", r);
  }
  return {issues.empty(), issues.empty() ? fmt("table6/7: %zu rows x 5 columns, table8: %zu rows x 7 columns, "
                                               "headers and value types as documented",
                                               groups, groups * 3)
                                         : "schema problems:" + issues};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::vector<int> known;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--known-failures", known, "Criteria whose FAIL does not affect the exit status")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "normalization suite", 30.0, normalization_suite},
      {2, "rotation algebra", 1.0, rotation_algebra},
      {3, "schedule closed forms", 1.0, schedule_closed_forms},
      {4, "boost oracle", std::nullopt, boost_oracle},
      {5, "opposition involution", std::nullopt, opposition_involution},
      {6, "knapsack oracle equivalence", 120.0, knapsack_oracle},
      {7, "onemax convergence", 60.0, onemax_convergence},
      {8, "three-way directional trend", 300.0, three_way_trend},
      {9, "feature-selection sanity", 300.0, feature_selection_sanity},
      {10, "complexity scaling", std::nullopt, complexity_scaling},
      {11, "manifest determinism", std::nullopt, determinism},
      {12, "table-shape conformance", std::nullopt, table_shapes},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> known_set(known.begin(), known.end());

  int failed = 0;
  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds && secs > *c.limit_seconds) {
      out.pass = false;
      out.detail += fmt(" [runtime %.1fs exceeds %.0fs]", secs, *c.limit_seconds);
    }
    std::cout << (out.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << " (" << fmt("%.2fs", secs)
              << "): " << out.detail;
    if (!out.pass && known_set.count(c.id)) std::cout << " [known failure]";
    std::cout << std::endl;
    if (!out.pass) {
      ++failed;
      unexpected += !known_set.count(c.id);
    }
  }
  std::cout << (failed == 0 ? "all criteria passed" : fmt("%d criteria failed, %d unexpected", failed, unexpected))
            << std::endl;
  return unexpected == 0 ? 0 : 1;
}
