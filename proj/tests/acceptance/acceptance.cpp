// Acceptance checks. Usage: acceptance <criterion> [data-dir]
// Prints one PASS/FAIL line per criterion; exit status 0 on pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "mrc/classifier.hpp"
#include "mrc/dataset.hpp"
#include "mrc/estimate.hpp"
#include "mrc/experiments.hpp"
#include "mrc/objective.hpp"
#include "mrc/random.hpp"
#include "mrc/solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mrc;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;  // measured value and tolerance
  bool skipped = false;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::filesystem::path data_dir = MRC_SOURCE_DIR "/data";

// ---------------------------------------------------------------------------

Outcome iterate_identity() {
  constexpr double tol = 1e-9;
  constexpr std::size_t iters = 10000;
  const std::size_t shapes[4][2] = {{5, 20}, {5, 500}, {50, 20}, {50, 500}};
  double worst = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    const auto [m, p] = shapes[t % 4];
    const PiecewiseLinearProblem prob = testing::to_problem(oracle::random_problem(3000 + t, m, p));
    std::vector<double> plain;
    plain.reserve((iters + 1) * m);
    SolverConfig c;
    c.max_iters = iters;
    c.method = SolverMethod::asm_basic;
    c.observer = [&](std::size_t, std::span<const double> mu) { plain.insert(plain.end(), mu.begin(), mu.end()); };
    solve(prob, c);
    std::size_t k = 0;
    c.method = SolverMethod::easm;
    c.observer = [&](std::size_t, std::span<const double> mu) {
      worst = std::max(worst, testing::relative_difference(mu, std::span<const double>(plain).subspan(k * m, m)));
      ++k;
    };
    solve(prob, c);
    if (k != iters + 1) return {false, "iterate count mismatch"};
  }
  return {worst <= tol, fmt("max relative iterate difference %.3g over 20 problems x 1e4 iterations (tol %.0e)",
                            worst, tol)};
}

Outcome lp_oracle_gap() {
  constexpr double tol = 1e-3;
  std::ifstream in(testing::fixture("lp_cases.json"));
  if (!in) return {false, "missing lp_cases.json"};
  const auto cases = nlohmann::json::parse(in)["cases"];
  double worst = 0.0;
  for (const auto& item : cases) {
    const auto rp = oracle::random_problem(item["seed"], item["m"], item["p"]);
    if (rp.a[0] != item["check"][0].get<double>()) return {false, "fixture regeneration mismatch"};
    SolverConfig c;
    c.method = SolverMethod::easm_restart;
    c.max_iters = 200000;
    c.restart_period = 10000;
    const SolverRun run = solve(testing::to_problem(rp), c);
    worst = std::max(worst, run.best_value - item["optimum"].get<double>());
  }
  return {worst <= tol && worst >= -1e-7,
          fmt("worst gap to the HiGHS optimum %.3g over %.0f problems (tol %.0e)", worst,
              static_cast<double>(cases.size()), tol)};
}

// A finite distribution over (x, y) with |X| support points.
struct FiniteDistribution {
  DenseMatrix x;
  std::vector<std::vector<double>> p;  // p[i][y]
};

FiniteDistribution random_distribution(std::uint64_t seed, std::size_t points, std::size_t classes) {
  oracle::SplitMix rng(seed);
  FiniteDistribution d;
  d.x = DenseMatrix(points, 2);
  for (double& v : d.x.data()) v = 2.0 * rng.symmetric();
  double total = 0.0;
  d.p.assign(points, std::vector<double>(classes));
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t y = 0; y < classes; ++y) {
      // Class-dependent tilt so the labels carry information about x.
      const double w = std::exp(1.5 * d.x(i, y % 2) * (y == 0 ? 1.0 : -1.0) + 0.3 * rng.symmetric());
      d.p[i][y] = w;
      total += w;
    }
  }
  for (auto& row : d.p)
    for (double& v : row) v /= total;
  return d;
}

Outcome bound_sandwich() {
  constexpr double tol = 1e-6;
  double worst_low = -1e300, worst_high = -1e300;
  for (std::size_t t = 0; t < 10; ++t) {
    const std::size_t classes = 2 + t % 2;
    const std::size_t points = 20 + 3 * t;
    const FiniteDistribution dist = random_distribution(500 + t, points, classes);
    auto fm = std::make_shared<const FeatureMap>(fourier_spec(2, classes, 3, 1.0, 900 + t));

    // Exact expectation by enumeration.
    Vector tau_inf(fm->size(), 0.0);
    for (std::size_t i = 0; i < points; ++i)
      for (std::size_t y = 0; y < classes; ++y) {
        const Vector phi_xy = (*fm)(dist.x.row(i), y);
        for (std::size_t j = 0; j < phi_xy.size(); ++j) tau_inf[j] += dist.p[i][y] * phi_xy[j];
      }
    oracle::SplitMix rng(77 + t);
    UncertaintySet set;
    set.tau = tau_inf;
    set.lambda.resize(fm->size());
    for (std::size_t j = 0; j < fm->size(); ++j) {
      const double e = 0.05 * rng.symmetric();
      set.tau[j] += e;
      set.lambda[j] = 2.0 * std::abs(e);
    }
    TrainOptions o;
    o.solver.method = SolverMethod::lp;
    const MrcModel model = fit(set, dist.x, fm, o, &dist.x);
    if (!model.lower_bound || !model.upper_solve.certified || !model.lower_solve->certified)
      return {false, "bounds were not LP-certified"};

    // Risk of h^U from mu* with phi* recomputed by subset enumeration.
    double phi_star = -1e300;
    std::vector<std::vector<double>> scores(points, std::vector<double>(classes));
    for (std::size_t i = 0; i < points; ++i) {
      for (std::size_t y = 0; y < classes; ++y) {
        const Vector phi_xy = (*fm)(dist.x.row(i), y);
        double s = 0.0;
        for (std::size_t j = 0; j < phi_xy.size(); ++j) s += phi_xy[j] * model.mu_star[j];
        scores[i][y] = s;
      }
      phi_star = std::max(phi_star, oracle::phi_by_enumeration(scores[i]));
    }
    double risk = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      std::vector<double> h(classes);
      double c = 0.0;
      for (std::size_t y = 0; y < classes; ++y) c += h[y] = std::max(0.0, scores[i][y] - phi_star);
      for (std::size_t y = 0; y < classes; ++y) {
        const double hy = c > 1e-12 ? h[y] / c : 1.0 / static_cast<double>(classes);
        risk += dist.p[i][y] * (1.0 - hy);
      }
    }
    worst_low = std::max(worst_low, *model.lower_bound - risk);
    worst_high = std::max(worst_high, risk - model.minimax_risk);
  }
  return {worst_low <= tol && worst_high <= tol,
          fmt("max(lower - risk) %.3g, max(risk - upper) %.3g over 10 distributions (tol %.0e)", worst_low,
              worst_high, tol)};
}

Outcome rule_validity() {
  constexpr double tol = 1e-12;
  oracle::SplitMix rng(4242);
  double sum_err = 0.0, range_err = 0.0, cx_max = 0.0, dom = -1e300;
  std::size_t evaluations = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    const std::size_t classes = 2 + t % 5;
    MrcModel model;
    model.features = std::make_shared<const FeatureMap>(fourier_spec(3, classes, 4, 1.0, 7000 + t));
    model.mu_star.resize(model.features->size());
    const double scale = 0.1 + 3.0 * rng.unit();
    for (double& v : model.mu_star) v = scale * rng.symmetric();
    model.anchor = DenseMatrix(100, 3);
    for (double& v : model.anchor.data()) v = 2.0 * rng.symmetric();
    model.phi_star = phi(model.mu_star, model.anchor, *model.features);
    for (std::size_t i = 0; i < model.anchor.rows(); ++i, ++evaluations) {
      const auto x = model.anchor.row(i);
      const Vector h = predict_proba(model, x);
      const std::size_t yd = predict(model, x);
      double total = 0.0;
      for (std::size_t y = 0; y < classes; ++y) {
        total += h[y];
        range_err = std::max({range_err, -h[y], h[y] - 1.0});
        const double hd = y == yd ? 1.0 : 0.0;
        dom = std::max(dom, (1.0 - hd) - 2.0 * (1.0 - h[y]));
      }
      sum_err = std::max(sum_err, std::abs(total - 1.0));
      cx_max = std::max(cx_max, normalization_constant(model, x));
    }
  }
  const bool pass = sum_err <= tol && range_err <= 0.0 && cx_max <= 1.0 + tol && dom <= tol;
  return {pass, fmt("%.0f evaluations: |sum-1| %.2g, max c_x %.15g, domination slack %.2g (tol 1e-12)",
                    static_cast<double>(evaluations), sum_err, cx_max, dom)};
}

Outcome phi_oracle() {
  constexpr double tol = 1e-12;
  oracle::SplitMix rng(99);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t classes = 2 + t % 5;
    std::vector<double> scores(classes);
    for (double& s : scores) {
      s = 2.0 * rng.symmetric();
      if (t % 4 == 0) s = std::round(4.0 * s) / 4.0;  // exact ties
    }
    worst = std::max(worst, std::abs(best_label_subset(scores).value - oracle::phi_by_enumeration(scores)));
  }
  return {worst <= tol, fmt("max difference %.3g over 1000 inputs, |Y| in 2..6 (tol %.0e)", worst, tol)};
}

Outcome confidence_formulas() {
  constexpr double tol = 1e-12;
  std::ifstream in(testing::fixture("lambda_cases.json"));
  if (!in) return {false, "missing lambda_cases.json"};
  const auto cases = nlohmann::json::parse(in)["cases"];
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (const auto& c : cases) {
    const double C = c["C"], delta = c["delta"];
    const std::size_t F = c["F"], Y = c["Y"], n = c["n"];
    const Vector var = c["variance"].get<Vector>();
    worst = std::max(worst, rel(lambda_hoeffding(C, F, Y, delta, n), c["hoeffding"].get<double>()));
    const Vector b = lambda_bernstein(C, F, Y, delta, n, var);
    const Vector p = lambda_practical(c["lambda0"].get<double>(), var, n);
    for (std::size_t j = 0; j < var.size(); ++j) {
      worst = std::max(worst, rel(b[j], c["bernstein"][j].get<double>()));
      worst = std::max(worst, rel(p[j], c["practical"][j].get<double>()));
    }
    const auto counts = c["class_counts"].get<std::vector<std::size_t>>();
    const auto owner = c["component_class"].get<std::vector<std::size_t>>();
    const Vector r = lambda_rademacher(C, c["R"].get<double>(), delta, n, counts, owner);
    for (std::size_t j = 0; j < owner.size(); ++j) worst = std::max(worst, rel(r[j], c["rademacher"][j].get<double>()));
  }
  return {worst <= tol, fmt("max relative error %.3g against 50-digit references, %.0f tuples (tol %.0e)", worst,
                            static_cast<double>(cases.size()), tol)};
}

// Seconds per iteration over iterations (warm, warm + window], and the
// fraction of sign changes over the same window.
struct Timing {
  double seconds_per_iteration = 0.0;
  double gamma = 0.0;
};

Timing time_window(const PiecewiseLinearProblem& prob, SolverMethod method, std::size_t warm, std::size_t window) {
  SolverConfig c;
  c.method = method;
  c.max_iters = warm + window;
  Clock::time_point start;
  Vector prev;
  std::size_t changes = 0;
  c.observer = [&](std::size_t k, std::span<const double> mu) {
    if (k == warm + 1) start = Clock::now();
    if (k > warm + 1)
      for (std::size_t j = 0; j < mu.size(); ++j) changes += sign(mu[j]) != sign(prev[j]);
    if (k >= warm + 1) prev.assign(mu.begin(), mu.end());
  };
  solve(prob, c);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {secs / static_cast<double>(window),
          static_cast<double>(changes) / (static_cast<double>(window) * static_cast<double>(prob.dimension()))};
}

Outcome incremental_speedup() {
  constexpr double ratio_tol = 0.5;
  const auto data = testing::blobs(1700, 2, 2, 2.0, 2024);
  const FeatureMap fm(fourier_spec(2, 2, 250, 0.0, 2024));
  const UncertaintySet set = estimate_uncertainty(data.instances, data.labels, fm, {});
  const PiecewiseLinearProblem prob = build_learning_problem(set, data.instances, fm);
  const std::size_t warm = 2000, window = 2000;
  const Timing plain = time_window(prob, SolverMethod::asm_basic, warm, window);
  const Timing fast = time_window(prob, SolverMethod::easm, warm, window);
  const double ratio = fast.seconds_per_iteration / plain.seconds_per_iteration;
  const bool pass = prob.num_pieces() >= 5000 && prob.dimension() >= 1000 && fast.gamma < 0.1 && ratio <= ratio_tol;
  return {pass, fmt("p=%.0f m=%.0f gamma=%.4f, E-ASM/ASM time per iteration %.3f (tol <= 0.5)",
                    static_cast<double>(prob.num_pieces()), static_cast<double>(prob.dimension()), fast.gamma,
                    ratio)};
}

Outcome reduced_anchor_convergence() {
  constexpr double tol = 0.02;
  const auto train = testing::blobs(500, 2, 3, 1.5, 61);
  const auto pool = testing::blobs(10000, 2, 3, 1.5, 62).instances;
  FeatureMapSpec spec;
  spec.kind = FeatureKind::identity;
  spec.constant_feature = true;
  TrainOptions o;
  o.compute_lower = false;
  const std::vector<std::size_t> sizes{100, 500, 1000, 2000};
  const ReduceStudy study = reduce_study(train, pool, spec, o, sizes, 10, 63);
  std::vector<double> medians;
  for (const ReduceSummary& s : study.summary) medians.push_back(s.median_gap);
  bool monotone = true;
  for (std::size_t k = 1; k < medians.size(); ++k) monotone = monotone && medians[k] <= medians[k - 1];
  std::string implicit;
  for (std::size_t s : study.implicit_sizes) implicit += " " + std::to_string(s);
  return {medians.back() <= tol && monotone,
          fmt("median gaps %.4f %.4f %.4f ", medians[0], medians[1], medians[2]) +
              fmt("%.4f (s=2000 tol %.2f, non-increasing required);", medians[3], tol) +
              " implicit pieces for s =" + (implicit.empty() ? " none" : implicit)};
}

Outcome uci_model_selection() {
  struct Target {
    const char* file;
    double expected;
  };
  const Target targets[] = {{"haberman.csv", 0.25}, {"mammographic.csv", 0.18}};
  constexpr double tol = 0.04;
  std::string detail;
  bool pass = true;
  for (const Target& t : targets) {
    const auto path = data_dir / t.file;
    if (!std::filesystem::exists(path)) {
      return {true, "skipped: " + path.string() + " not found (convert the UCI files with tools/prepare_uci.py)", true};
    }
    const Dataset data = load_csv(path.string(), false);
    FeatureMapSpec spec;  // D = 500, scale chosen from the grid
    TrainOptions o;       // lambda0 = 0.3, easm-restart, 2e5 iterations, restarts every 1e4
    o.solver.stop_window = 10000;
    o.solver.stop_tolerance = 1e-6;
    const SelectionReport r = model_select(data, spec, o, {}, 20, 0.2, 20240611);
    const bool ok = std::abs(r.mean_err_det - t.expected) <= tol;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += std::string(t.file) + fmt(" mean det. error %.4f +- %.4f (target %.2f +- %.2f)", r.mean_err_det,
                                        r.std_err_det, t.expected, tol);
  }
  return {pass, detail};
}

Outcome hoeffding_coverage() {
  constexpr double required = 0.90;
  const std::size_t classes = 3, points = 40, n = 200;
  const FiniteDistribution dist = random_distribution(31337, points, classes);
  const FeatureMap fm(fourier_spec(2, classes, 5, 1.0, 5));
  Vector tau_inf(fm.size(), 0.0);
  std::vector<double> cdf;
  double acc = 0.0;
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t y = 0; y < classes; ++y) {
      const Vector phi_xy = fm(dist.x.row(i), y);
      for (std::size_t j = 0; j < phi_xy.size(); ++j) tau_inf[j] += dist.p[i][y] * phi_xy[j];
      cdf.push_back(acc += dist.p[i][y]);
    }
  oracle::SplitMix rng(8080);
  std::size_t covered = 0;
  const std::size_t resamples = 200;
  EstimateOptions o;
  o.mode = LambdaMode::hoeffding;
  o.delta = 0.05;
  for (std::size_t r = 0; r < resamples; ++r) {
    DenseMatrix x(n, 2);
    std::vector<std::size_t> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = rng.unit() * cdf.back();
      const auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const std::size_t c = std::min(cell, cdf.size() - 1);
      x(k, 0) = dist.x(c / classes, 0);
      x(k, 1) = dist.x(c / classes, 1);
      y[k] = c % classes;
    }
    MrcModel model;
    model.features = std::make_shared<const FeatureMap>(fm.spec());
    model.uncertainty = estimate_uncertainty(x, y, fm, o);
    model.mu_star.assign(fm.size(), 0.0);
    covered += diagnostics(model, tau_inf).covered;
  }
  const double rate = static_cast<double>(covered) / static_cast<double>(resamples);
  return {rate >= required, fmt("coverage %.3f over 200 resamples (required >= %.2f)", rate, required)};
}

struct Criterion {
  int number;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

const std::map<std::string, Criterion>& criteria() {
  static const std::map<std::string, Criterion> all{
      {"iterate_identity", {1, "ASM and E-ASM iterates agree", 60, iterate_identity}},
      {"lp_oracle_gap", {2, "E-ASM-R reaches the LP optimum", 300, lp_oracle_gap}},
      {"bound_sandwich", {3, "certified bounds contain the exact risk", 120, bound_sandwich}},
      {"rule_validity", {4, "randomized and deterministic rules are valid", 1e9, rule_validity}},
      {"phi_oracle", {5, "top-k phi matches subset enumeration", 1e9, phi_oracle}},
      {"confidence_formulas", {6, "confidence widths match references", 1e9, confidence_formulas}},
      {"incremental_speedup", {7, "E-ASM halves the time per iteration", 300, incremental_speedup}},
      {"reduced_anchor_convergence", {8, "reduced anchor sets converge", 600, reduced_anchor_convergence}},
      {"uci_model_selection", {9, "UCI error with scale selection", 1800, uci_model_selection}},
      {"hoeffding_coverage", {10, "Hoeffding widths cover the true mean", 120, hoeffding_coverage}},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || !criteria().count(argv[1])) {
    std::fprintf(stderr, "usage: acceptance <criterion> [data-dir]\ncriteria:");
    for (const auto& [name, c] : criteria()) std::fprintf(stderr, " %s", name.c_str());
    std::fprintf(stderr, "\n");
    return 2;
  }
  if (argc > 2) data_dir = argv[2];
  const Criterion& c = criteria().at(argv[1]);
  const auto start = Clock::now();
  Outcome out;
  try {
    out = c.run();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = secs <= c.limit_seconds;
  const bool pass = out.pass && in_time;
  std::string timing = fmt("%.1f s", secs);
  if (c.limit_seconds < 1e8) timing += fmt(", limit %.0f s", c.limit_seconds);
  std::printf("[%s] %d %s: %s [%s]\n", out.skipped ? "SKIP" : (pass ? "PASS" : "FAIL"), c.number, c.title,
              out.detail.c_str(), timing.c_str());
  return pass ? 0 : 1;
}
