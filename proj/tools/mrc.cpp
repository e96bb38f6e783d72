// mrc: train, apply and audit minimax risk classifiers from the command line.
//
// Exit status: 0 success, 1 input error, 2 numerical or solver error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrc/classifier.hpp"
#include "mrc/dataset.hpp"
#include "mrc/errors.hpp"
#include "mrc/experiments.hpp"
#include "mrc/model_io.hpp"
#include "mrc/random.hpp"

#ifndef MRC_VERSION
#define MRC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrc;

namespace {

struct Flags {
  std::string data;
  bool header = false;
  double test_fraction = 0.0;
  std::string features = "rff";
  std::size_t D = 500;
  double sigma = 0.0;
  std::uint64_t rff_seed = 0;
  bool constant_feature = false;
  std::string lambda_mode = "practical";
  double lambda0 = 0.3;
  double delta = 0.05;
  double rademacher_r = 1.0;
  std::string solver = "easm-restart";
  std::size_t max_iters = 200000;
  std::size_t restart_period = 10000;
  std::size_t stop_window = 0;
  double stop_tolerance = 1e-7;
  std::string anchor = "train";
  std::string variant = "standard";
  bool no_normalize = false;
  bool trace = false;
  std::size_t trace_stride = 100;
  std::uint64_t seed = 0;
  std::string out = ".";

  // command-specific
  std::string model;
  bool labeled = true;
  bool deterministic = false;
  std::string lambda_delta;
  std::vector<double> grid;
  std::size_t folds = 10;
  std::string pool;
  std::size_t train_size = 500;
  std::vector<std::size_t> sizes;
  std::size_t repetitions = 10;
  std::vector<std::string> methods;
  std::vector<double> sigmas;
  std::size_t splits = 20;
};

void add_data_flags(CLI::App* app, Flags& f) {
  app->add_option("--data", f.data, "CSV file, label in the last column")->required();
  app->add_flag("--header", f.header, "skip the first line of CSV inputs");
}

void add_model_flags(CLI::App* app, Flags& f) {
  app->add_option("--features", f.features, "rff or identity")->capture_default_str();
  app->add_option("--D", f.D, "number of random frequencies")->capture_default_str();
  app->add_option("--sigma", f.sigma, "kernel scale; 0 selects sqrt(d/2)")->capture_default_str();
  app->add_option("--rff-seed", f.rff_seed, "seed of the random frequencies")->capture_default_str();
  app->add_flag("--constant-feature", f.constant_feature, "prepend a constant feature");
  app->add_option("--lambda-mode", f.lambda_mode, "practical, hoeffding, bernstein or rademacher")
      ->capture_default_str();
  app->add_option("--lambda0", f.lambda0, "scale of the practical confidence widths")->capture_default_str();
  app->add_option("--delta", f.delta, "confidence level parameter")->capture_default_str();
  app->add_option("--rademacher-r", f.rademacher_r, "Rademacher complexity bound R")->capture_default_str();
  app->add_option("--variant", f.variant, "standard or fixed-marginal")->capture_default_str();
  app->add_flag("--no-normalize", f.no_normalize, "use raw instance values");
}

void add_solver_flags(CLI::App* app, Flags& f) {
  app->add_option("--solver", f.solver, "bsm, ebsm, asm, easm, easm-restart or lp")->capture_default_str();
  app->add_option("--max-iters", f.max_iters)->capture_default_str();
  app->add_option("--restart-period", f.restart_period)->capture_default_str();
  app->add_option("--stop-window", f.stop_window,
                  "stop when the best value improves by less than --stop-tolerance over this many "
                  "iterations (0: run all iterations)")
      ->capture_default_str();
  app->add_option("--stop-tolerance", f.stop_tolerance)->capture_default_str();
}

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  app->add_option("--out", f.out, "output directory")->capture_default_str();
}

FeatureMapSpec feature_spec(const Flags& f) {
  FeatureMapSpec spec;
  spec.kind = parse_feature_kind(f.features);
  spec.num_frequencies = f.D;
  spec.sigma = f.sigma;
  spec.seed = f.rff_seed;
  spec.constant_feature = f.constant_feature;
  if (spec.kind == FeatureKind::random_fourier && f.D == 0) throw InputError("--D must be positive");
  if (f.sigma < 0.0) throw InputError("--sigma must be nonnegative");
  return spec;
}

SolverConfig solver_config(const Flags& f) {
  SolverConfig config;
  config.method = parse_solver_method(f.solver);
  config.max_iters = f.max_iters;
  config.restart_period = f.restart_period;
  config.record_trace = f.trace;
  config.trace_stride = std::max<std::size_t>(1, f.trace_stride);
  config.stop_window = f.stop_window;
  config.stop_tolerance = f.stop_tolerance;
  if (f.stop_tolerance < 0.0) throw InputError("--stop-tolerance must be nonnegative");
  if (f.max_iters < 1) throw InputError("--max-iters must be at least 1");
  if (f.restart_period < 1) throw InputError("--restart-period must be at least 1");
  return config;
}

TrainOptions train_options(const Flags& f) {
  TrainOptions options;
  options.estimate.mode = parse_lambda_mode(f.lambda_mode);
  options.estimate.lambda0 = f.lambda0;
  options.estimate.delta = f.delta;
  options.estimate.rademacher_r = f.rademacher_r;
  if (!(f.delta > 0.0 && f.delta < 1.0)) throw InputError("--delta must lie in (0, 1)");
  if (f.lambda0 < 0.0) throw InputError("--lambda0 must be nonnegative");
  options.solver = solver_config(f);
  options.variant = parse_model_variant(f.variant);
  options.normalize = !f.no_normalize;
  if (f.anchor != "train") {
    if (f.anchor.rfind("file:", 0) != 0) throw InputError("--anchor expects 'train' or 'file:<path>'");
    options.anchor = load_instances_csv(f.anchor.substr(5), f.header, false);
  }
  return options;
}

json flags_json(const Flags& f, const std::string& command) {
  return {{"command", command},
          {"data", f.data},
          {"header", f.header},
          {"test_fraction", f.test_fraction},
          {"features", f.features},
          {"D", f.D},
          {"sigma", f.sigma},
          {"rff_seed", f.rff_seed},
          {"constant_feature", f.constant_feature},
          {"lambda_mode", f.lambda_mode},
          {"lambda0", f.lambda0},
          {"delta", f.delta},
          {"rademacher_r", f.rademacher_r},
          {"solver", f.solver},
          {"max_iters", f.max_iters},
          {"restart_period", f.restart_period},
          {"stop_window", f.stop_window},
          {"stop_tolerance", f.stop_tolerance},
          {"anchor", f.anchor},
          {"variant", f.variant},
          {"normalize", !f.no_normalize},
          {"seed", f.seed},
          {"out", f.out}};
}

json report_header(const Flags& f, const std::string& command) {
  return {{"version", MRC_VERSION}, {"flags", flags_json(f, command)}, {"seed", f.seed}};
}

json summary_json(const SolveSummary& s) {
  return {{"method", s.method},       {"iterations", s.iterations}, {"gamma", s.gamma},
          {"certified", s.certified}, {"raw_value", s.raw_value},   {"stop_reason", s.stop_reason},
          {"label", s.certified ? "exact" : "approximate"}};
}

fs::path out_dir(const Flags& f) {
  fs::path dir(f.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError(dir.string() + ": cannot create output directory (" + ec.message() + ")");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void print_notices(const Notices& notices) {
  for (const auto& n : notices) std::cerr << "notice: " << n << '\n';
}

int cmd_train(const Flags& f) {
  Dataset data = load_csv(f.data, f.header);
  std::optional<Dataset> test;
  json seeds = {{"master", f.seed}, {"rff", f.rff_seed}};
  if (f.test_fraction > 0.0) {
    const std::uint64_t split_seed = derive_seed(f.seed, 0);
    auto parts = stratified_split(data, f.test_fraction, split_seed);
    data = std::move(parts.first);
    test = std::move(parts.second);
    seeds["split"] = split_seed;
  }
  const TrainOptions options = train_options(f);
  Notices notices;
  const MrcModel model = train(data, feature_spec(f), options, &notices);
  print_notices(notices);

  const fs::path dir = out_dir(f);
  save_model(model, dir / "model.json");
  json report = report_header(f, "train");
  report["seeds"] = seeds;
  report["n"] = data.n();
  report["d"] = data.d();
  report["classes"] = data.num_classes();
  report["m"] = model.features->size();
  report["p"] = model.num_pieces;
  report["minimax_risk"] = model.minimax_risk;
  report["lower_bound"] = model.lower_bound ? json(*model.lower_bound) : json(nullptr);
  report["phi_star"] = model.phi_star;
  report["solver"]["upper"] = summary_json(model.upper_solve);
  report["solver"]["lower"] = model.lower_solve ? summary_json(*model.lower_solve) : json(nullptr);
  report["repaired"] = model.uncertainty.provenance.repaired;
  report["notices"] = notices;
  report["model_path"] = (dir / "model.json").string();
  if (f.trace) {
    SolverRun run;
    run.trace = model.trace;
    write_trace_csv(run, (dir / "trace.csv").string());
    report["trace_path"] = (dir / "trace.csv").string();
  } else {
    report["trace_path"] = nullptr;
  }
  if (test) {
    const Evaluation e = evaluate(model, *test);
    report["test"] = {{"n", test->n()}, {"randomized_risk", e.randomized_risk},
                      {"deterministic_error", e.deterministic_error}};
  }
  write_json(dir / "report.json", report);
  std::cout << "minimax risk (upper bound): " << fmt(model.minimax_risk) << '\n';
  if (model.lower_bound) std::cout << "lower bound: " << fmt(*model.lower_bound) << '\n';
  if (test) {
    std::cout << "test randomized risk: " << fmt(report["test"]["randomized_risk"].get<double>()) << '\n'
              << "test deterministic error: " << fmt(report["test"]["deterministic_error"].get<double>()) << '\n';
  }
  std::cout << "model written to " << (dir / "model.json").string() << '\n';
  return 0;
}

int cmd_predict(const Flags& f) {
  const MrcModel model = load_model(f.model);
  const fs::path dir = out_dir(f);
  std::ofstream out(dir / "predictions.csv");
  if (!out) throw InputError((dir / "predictions.csv").string() + ": cannot open for writing");
  out.precision(17);
  out << "row,predicted";
  for (const auto& name : model.label_names) out << ",p_" << name;
  out << '\n';
  auto write_row = [&](std::size_t i, std::span<const double> x) {
    const Vector h = predict_proba(model, x);
    out << i << ',' << model.label_names[predict(model, x)];
    for (double p : h) out << ',' << p;
    out << '\n';
  };
  if (f.labeled) {
    const Dataset data = load_csv(f.data, f.header);
    Dataset mapped = data;
    // Map file labels onto the model's label vocabulary.
    for (std::size_t i = 0; i < data.n(); ++i) {
      const std::string& name = data.label_names[data.labels[i]];
      const auto it = std::find(model.label_names.begin(), model.label_names.end(), name);
      if (it == model.label_names.end()) throw InputError(f.data + ": label '" + name + "' unknown to the model");
      mapped.labels[i] = static_cast<std::size_t>(it - model.label_names.begin());
    }
    mapped.label_names = model.label_names;
    for (std::size_t i = 0; i < data.n(); ++i) write_row(i, data.instances.row(i));
    const Evaluation e = evaluate(model, mapped);
    std::cout << "randomized risk: " << fmt(e.randomized_risk) << '\n'
              << "deterministic error: " << fmt(e.deterministic_error) << '\n';
  } else {
    const DenseMatrix x = load_instances_csv(f.data, f.header, false);
    for (std::size_t i = 0; i < x.rows(); ++i) write_row(i, x.row(i));
  }
  std::cout << "predictions written to " << (dir / "predictions.csv").string() << '\n';
  return 0;
}

// lambda_delta spec: add:<c>, file:<path>, hoeffding or bernstein (the last two need --data).
Vector parse_lambda_delta(const Flags& f, const MrcModel& model) {
  const Vector& lambda = model.uncertainty.lambda;
  const std::string& s = f.lambda_delta;
  if (s.rfind("add:", 0) == 0) {
    const double c = std::stod(s.substr(4));
    Vector out(lambda);
    for (double& v : out) v += c;
    return out;
  }
  if (s.rfind("file:", 0) == 0) {
    std::ifstream in(s.substr(5));
    if (!in) throw InputError(s.substr(5) + ": cannot open");
    Vector out;
    double v;
    while (in >> v) out.push_back(v);
    if (out.size() != lambda.size()) {
      throw InputError(s.substr(5) + ": expected " + std::to_string(lambda.size()) + " values");
    }
    return out;
  }
  if (s == "hoeffding" || s == "bernstein") {
    if (f.data.empty()) throw InputError("--lambda-delta " + s + " needs the training data (--data)");
    const Dataset data = load_csv(f.data, f.header);
    DenseMatrix x(data.n(), data.d());
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Vector z = normalize_instance(model, data.instances.row(i));
      std::copy(z.begin(), z.end(), x.row(i).begin());
    }
    EstimateOptions est;
    est.mode = parse_lambda_mode(s);
    est.delta = f.delta;
    return estimate_uncertainty(x, data.labels, *model.features, est).lambda;
  }
  throw InputError("--lambda-delta expects add:<c>, file:<path>, hoeffding or bernstein");
}

int cmd_bounds(const Flags& f) {
  const MrcModel model = load_model(f.model);
  json report = report_header(f, "bounds");
  report["model"] = f.model;
  report["randomized"] = {{"lower", model.lower_bound ? json(*model.lower_bound) : json(nullptr)},
                          {"upper", model.minimax_risk},
                          {"upper_solve", summary_json(model.upper_solve)},
                          {"lower_solve", model.lower_solve ? summary_json(*model.lower_solve) : json(nullptr)}};
  std::cout << "randomized rule: [" << (model.lower_bound ? fmt(*model.lower_bound) : "n/a") << ", "
            << fmt(model.minimax_risk) << "]\n";
  if (f.deterministic) {
    const DenseMatrix rule = rule_table(model, model.anchor, true);
    const RuleBounds b = bounds_for_rule(model.uncertainty, model.anchor, *model.features, rule, solver_config(f));
    report["deterministic"] = {{"lower", b.lower},
                               {"upper", b.upper},
                               {"lower_solve", summary_json(b.lower_solve)},
                               {"upper_solve", summary_json(b.upper_solve)}};
    std::cout << "deterministic rule: [" << fmt(b.lower) << ", " << fmt(b.upper) << "]\n";
  }
  if (!f.lambda_delta.empty()) {
    const Vector lambda_delta = parse_lambda_delta(f, model);
    for (std::size_t i = 0; i < lambda_delta.size(); ++i) {
      if (lambda_delta[i] < model.uncertainty.lambda[i]) {
        std::cerr << "error: high-confidence width below the model's width at component " << i << '\n';
        return 2;
      }
    }
    if (!model.lower_bound) throw InputError("model has no lower bound; retrain the standard variant");
    const Interval iv = high_confidence_bounds(model, lambda_delta, model.mu_lower);
    report["high_confidence"] = {{"lo", iv.lo}, {"hi", iv.hi}, {"lo_raw", iv.lo_raw}, {"hi_raw", iv.hi_raw},
                                 {"lambda_delta", f.lambda_delta}};
    std::cout << "high-confidence interval: [" << fmt(iv.lo) << ", " << fmt(iv.hi) << "]\n";
  }
  write_json(out_dir(f) / "bounds.json", report);
  return 0;
}

int cmd_sweep_lambda(const Flags& f) {
  const Dataset data = load_csv(f.data, f.header);
  std::vector<double> grid = f.grid;
  if (grid.empty()) for (int k = 0; k <= 10; ++k) grid.push_back(0.1 * k);
  const auto rows = sweep_lambda(data, feature_spec(f), train_options(f), grid, f.folds, f.seed);
  const fs::path dir = out_dir(f);
  std::ofstream out(dir / "sweep.csv");
  out.precision(17);
  out << "lambda0,upper,lower,risk_rand,err_det\n";
  for (const auto& r : rows)
    out << r.lambda0 << ',' << r.upper << ',' << r.lower << ',' << r.risk_rand << ',' << r.err_det << '\n';
  json report = report_header(f, "sweep-lambda");
  report["folds"] = f.folds;
  report["grid"] = grid;
  report["fold_seed"] = derive_seed(f.seed, 0);
  report["table"] = (dir / "sweep.csv").string();
  write_json(dir / "sweep_report.json", report);
  std::cout << "wrote " << (dir / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_reduce_study(const Flags& f) {
  const Dataset data = load_csv(f.data, f.header);
  const DenseMatrix pool = f.pool.empty() ? data.instances : load_instances_csv(f.pool, f.header, false);
  if (f.train_size < 2 || f.train_size > data.n()) {
    throw InputError("--train-size must lie in [2, " + std::to_string(data.n()) + "]");
  }
  // tau and lambda come from a random training sample of the data.
  std::mt19937_64 rng(derive_seed(f.seed, 0));
  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  order.resize(f.train_size);
  std::sort(order.begin(), order.end());
  const Dataset train_set = data.subset(order);
  std::vector<std::size_t> sizes = f.sizes;
  if (sizes.empty()) sizes = {100, 500, 1000, 2000};
  const ReduceStudy study =
      reduce_study(train_set, pool, feature_spec(f), train_options(f), sizes, f.repetitions, derive_seed(f.seed, 1));
  const fs::path dir = out_dir(f);
  std::ofstream out(dir / "reduce.csv");
  out.precision(17);
  out << "s,mean_upper,std_upper,mean_lower,std_lower,mean_gap,std_gap,median_gap,epsilon_s,repairs,"
         "upper_full,lower_full\n";
  for (const auto& r : study.summary) {
    out << r.s << ',' << r.mean_upper << ',' << r.std_upper << ',' << r.mean_lower << ',' << r.std_lower << ','
        << r.mean_gap << ',' << r.std_gap << ',' << r.median_gap << ',' << r.epsilon << ',' << r.repairs << ','
        << study.upper_full << ',' << study.lower_full << '\n';
  }
  std::ofstream runs(dir / "reduce_runs.csv");
  runs.precision(17);
  runs << "s,repetition,upper,lower,gap,repaired\n";
  for (const auto& r : study.runs)
    runs << r.s << ',' << r.repetition << ',' << r.upper << ',' << r.lower << ',' << r.gap << ',' << r.repaired << '\n';
  json report = report_header(f, "reduce-study");
  report["train_size"] = f.train_size;
  report["pool_size"] = pool.rows();
  report["sizes"] = sizes;
  report["repetitions"] = f.repetitions;
  report["upper_full"] = study.upper_full;
  report["lower_full"] = study.lower_full;
  report["full_repaired"] = study.full_repaired;
  report["implicit_piece_sizes"] = study.implicit_sizes;
  for (std::size_t s : study.implicit_sizes) {
    std::cerr << "notice: anchor size " << s
              << " exceeds the Gram memory budget; solved with the plain accelerated method on implicit pieces\n";
  }
  write_json(dir / "reduce_report.json", report);
  std::cout << "wrote " << (dir / "reduce.csv").string() << '\n';
  return 0;
}

int cmd_bench_solvers(const Flags& f) {
  const Dataset data = load_csv(f.data, f.header);
  const TrainOptions options = train_options(f);
  FeatureMapSpec spec = feature_spec(f);
  DenseMatrix x = data.instances;
  if (options.normalize) x = apply_normalizer(fit_normalizer(x), x);
  if (spec.kind == FeatureKind::identity) {
    spec = identity_spec(x, data.num_classes(), spec.constant_feature);
  } else {
    spec.num_classes = data.num_classes();
    spec.input_dim = data.d();
  }
  const FeatureMap features(spec);
  const UncertaintySet set = estimate_uncertainty(x, data.labels, features, options.estimate);
  const PiecewiseLinearProblem problem = build_learning_problem(set, x, features);

  std::vector<SolverMethod> methods;
  const std::vector<std::string> names =
      f.methods.empty() ? std::vector<std::string>{"bsm", "ebsm", "asm", "easm", "easm-restart"} : f.methods;
  for (const auto& n : names) methods.push_back(parse_solver_method(n));
  SolverConfig base = options.solver;
  base.trace_stride = std::max<std::size_t>(1, f.trace_stride);
  const BenchResult result = bench_solvers(problem, base, methods);

  const fs::path dir = out_dir(f);
  json report = report_header(f, "bench-solvers");
  report["n"] = data.n();
  report["m"] = problem.dimension();
  report["p"] = problem.num_pieces();
  report["reference"] = result.has_reference ? json(result.reference_value) : json(nullptr);
  if (!result.has_reference) report["reference_note"] = result.reference_note;
  for (const SolverRun& run : result.runs) {
    const std::string name = to_string(run.method);
    const fs::path trace = dir / ("trace_" + name + ".csv");
    write_trace_csv(run, trace.string());
    json entry = {{"method", name},
                  {"initial_value", run.initial_value},
                  {"best_value", run.best_value},
                  {"iterations", run.iterations},
                  {"gamma", run.gamma},
                  {"elapsed_seconds", run.elapsed_seconds},
                  {"seconds_per_iteration", run.iterations ? run.elapsed_seconds / run.iterations : 0.0},
                  {"trace", trace.string()}};
    if (result.has_reference) entry["gap"] = run.best_value - result.reference_value;
    report["methods"].push_back(entry);
    std::cout << name << ": best " << fmt(run.best_value) << " after " << run.iterations << " iterations, "
              << fmt(run.elapsed_seconds) << " s, gamma " << fmt(run.gamma) << '\n';
  }
  write_json(dir / "bench_summary.json", report);
  return 0;
}

int cmd_model_select(const Flags& f) {
  const Dataset data = load_csv(f.data, f.header);
  const double test_fraction = f.test_fraction > 0.0 ? f.test_fraction : 0.2;
  const SelectionReport sel =
      model_select(data, feature_spec(f), train_options(f), f.sigmas, f.splits, test_fraction, f.seed);
  const fs::path dir = out_dir(f);
  std::ofstream out(dir / "model_select.csv");
  out.precision(17);
  out << "split,sigma,upper,lower,risk_rand,err_det\n";
  json report = report_header(f, "model-select");
  for (const auto& s : sel.splits) {
    out << s.split << ',' << s.sigmas[s.selected] << ',' << s.upper << ',' << s.lower << ',' << s.risk_rand << ','
        << s.err_det << '\n';
    report["splits"].push_back({{"split", s.split},
                                {"split_seed", derive_seed(f.seed, s.split)},
                                {"sigmas", s.sigmas},
                                {"uppers", s.uppers},
                                {"selected_sigma", s.sigmas[s.selected]},
                                {"upper", s.upper},
                                {"lower", s.lower},
                                {"risk_rand", s.risk_rand},
                                {"err_det", s.err_det}});
  }
  report["mean_err_det"] = sel.mean_err_det;
  report["std_err_det"] = sel.std_err_det;
  report["mean_risk_rand"] = sel.mean_risk_rand;
  report["std_risk_rand"] = sel.std_risk_rand;
  report["mean_upper"] = sel.mean_upper;
  report["mean_lower"] = sel.mean_lower;
  write_json(dir / "model_select.json", report);
  std::cout << "deterministic test error: " << fmt(sel.mean_err_det) << " +- " << fmt(sel.std_err_det) << '\n'
            << "randomized test risk: " << fmt(sel.mean_risk_rand) << " +- " << fmt(sel.std_risk_rand) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax risk classifiers: learning, prediction and performance bounds"};
  app.set_version_flag("--version", std::string(MRC_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto* train_cmd = app.add_subcommand("train", "fit a model and report its bounds");
  add_data_flags(train_cmd, f);
  add_model_flags(train_cmd, f);
  add_solver_flags(train_cmd, f);
  add_run_flags(train_cmd, f);
  train_cmd->add_option("--test-fraction", f.test_fraction, "hold out this stratified fraction for testing")
      ->capture_default_str();
  train_cmd->add_option("--anchor", f.anchor, "train or file:<path> (instances only)")->capture_default_str();
  train_cmd->add_flag("--trace", f.trace, "write the learning solver trace");
  train_cmd->add_option("--trace-stride", f.trace_stride)->capture_default_str();

  auto* predict_cmd = app.add_subcommand("predict", "apply a model to a CSV file");
  predict_cmd->add_option("--model", f.model)->required();
  predict_cmd->add_option("--data", f.data, "CSV of instances")->required();
  predict_cmd->add_flag("--header", f.header);
  predict_cmd->add_flag("!--unlabeled", f.labeled, "the file has no label column");
  add_run_flags(predict_cmd, f);

  auto* bounds_cmd = app.add_subcommand("bounds", "performance bounds of a trained model");
  bounds_cmd->add_option("--model", f.model)->required();
  bounds_cmd->add_flag("--deterministic", f.deterministic, "also bound the deterministic rule");
  bounds_cmd->add_option("--lambda-delta", f.lambda_delta,
                         "high-confidence widths: add:<c>, file:<path>, hoeffding or bernstein");
  bounds_cmd->add_option("--data", f.data, "training CSV, for hoeffding/bernstein widths");
  bounds_cmd->add_flag("--header", f.header);
  bounds_cmd->add_option("--delta", f.delta)->capture_default_str();
  add_solver_flags(bounds_cmd, f);
  add_run_flags(bounds_cmd, f);

  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "bounds and errors over a lambda0 grid");
  add_data_flags(sweep_cmd, f);
  add_model_flags(sweep_cmd, f);
  add_solver_flags(sweep_cmd, f);
  add_run_flags(sweep_cmd, f);
  sweep_cmd->add_option("--grid", f.grid, "comma-separated lambda0 values (default 0,0.1,...,1)")->delimiter(',');
  sweep_cmd->add_option("--folds", f.folds)->capture_default_str();

  auto* reduce_cmd = app.add_subcommand("reduce-study", "minimax risk over random anchor subsets");
  add_data_flags(reduce_cmd, f);
  add_model_flags(reduce_cmd, f);
  add_solver_flags(reduce_cmd, f);
  add_run_flags(reduce_cmd, f);
  reduce_cmd->add_option("--pool", f.pool, "anchor pool CSV (instances only); default: all of --data");
  reduce_cmd->add_option("--train-size", f.train_size, "samples used for tau and lambda")->capture_default_str();
  reduce_cmd->add_option("--sizes", f.sizes, "comma-separated subset sizes (default 100,500,1000,2000)")
      ->delimiter(',');
  reduce_cmd->add_option("--repetitions", f.repetitions)->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench-solvers", "compare solvers on one learning problem");
  add_data_flags(bench_cmd, f);
  add_model_flags(bench_cmd, f);
  add_solver_flags(bench_cmd, f);
  add_run_flags(bench_cmd, f);
  bench_cmd->add_option("--methods", f.methods, "comma-separated solver names")->delimiter(',');
  bench_cmd->add_option("--trace-stride", f.trace_stride)->capture_default_str();

  auto* select_cmd = app.add_subcommand("model-select", "choose the kernel scale by the minimax risk");
  add_data_flags(select_cmd, f);
  add_model_flags(select_cmd, f);
  add_solver_flags(select_cmd, f);
  add_run_flags(select_cmd, f);
  select_cmd->add_option("--splits", f.splits)->capture_default_str();
  select_cmd->add_option("--test-fraction", f.test_fraction, "default 0.2");
  select_cmd->add_option("--sigmas", f.sigmas, "comma-separated scales; default from pairwise distances")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(f);
    if (*predict_cmd) return cmd_predict(f);
    if (*bounds_cmd) return cmd_bounds(f);
    if (*sweep_cmd) return cmd_sweep_lambda(f);
    if (*reduce_cmd) return cmd_reduce_study(f);
    if (*bench_cmd) return cmd_bench_solvers(f);
    if (*select_cmd) return cmd_model_select(f);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
