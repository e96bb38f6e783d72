#include "mrc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mrc/errors.hpp"
#include "mrc/kernels.hpp"
#include "mrc/objective.hpp"

namespace mrc {

namespace {

constexpr double kUniformThreshold = 1e-12;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

SolveSummary summarize(const SolverRun& run, double raw_value) {
  SolveSummary s;
  s.method = to_string(run.method);
  s.iterations = run.iterations;
  s.gamma = run.gamma;
  s.certified = run.certified;
  s.raw_value = raw_value;
  s.stop_reason = run.stop_reason;
  return s;
}

void scores_for(const MrcModel& model, std::span<const double> normalized_x, std::span<double> scores) {
  const Vector psi = model.features->scalar_features(normalized_x);
  model.features->class_scores(psi, model.mu_star, scores);
}

// (scores - shift)_+ normalized, uniform when everything is clipped.
Vector clipped_distribution(std::span<const double> scores, double shift) {
  Vector h(scores.size());
  double total = 0.0;
  for (std::size_t y = 0; y < scores.size(); ++y) {
    h[y] = std::max(0.0, scores[y] - shift);
    total += h[y];
  }
  if (total > kUniformThreshold) {
    for (double& v : h) v /= total;
  } else {
    std::fill(h.begin(), h.end(), 1.0 / static_cast<double>(scores.size()));
  }
  return h;
}

Vector fixed_marginal_from_scores(std::span<const double> scores, Notices* notices) {
  const double phi_x = best_label_subset(scores).value;
  Vector h(scores.size());
  double total = 0.0;
  for (std::size_t y = 0; y < scores.size(); ++y) {
    h[y] = std::max(0.0, scores[y] - phi_x);
    total += h[y];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    const std::string msg = "fixed-marginal probabilities summed to " + std::to_string(total) + "; renormalized";
    if (notices) notices->push_back(msg);
    else std::cerr << "warning: " << msg << '\n';
    if (total > kUniformThreshold) {
      for (double& v : h) v /= total;
    } else {
      std::fill(h.begin(), h.end(), 1.0 / static_cast<double>(scores.size()));
    }
  }
  return h;
}

Vector distribution_from_scores(const MrcModel& model, std::span<const double> scores) {
  if (model.variant == ModelVariant::fixed_marginal) return fixed_marginal_from_scores(scores, nullptr);
  return clipped_distribution(scores, model.phi_star);
}

}  // namespace

std::string to_string(ModelVariant variant) {
  return variant == ModelVariant::standard ? "standard" : "fixed_marginal";
}

ModelVariant parse_model_variant(const std::string& name) {
  if (name == "standard") return ModelVariant::standard;
  if (name == "fixed_marginal" || name == "fixed-marginal") return ModelVariant::fixed_marginal;
  throw InputError("unknown model variant '" + name + "'");
}

Vector normalize_instance(const MrcModel& model, std::span<const double> x) {
  if (x.size() != model.features->input_dim()) {
    throw InputError("instance has " + std::to_string(x.size()) + " values, model expects " +
                     std::to_string(model.features->input_dim()));
  }
  Vector out(x.begin(), x.end());
  if (model.normalization.mean.empty()) return out;
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = (out[j] - model.normalization.mean[j]) / model.normalization.stddev[j];
  return out;
}

MrcModel fit(const UncertaintySet& set, const DenseMatrix& anchor, std::shared_ptr<const FeatureMap> features,
             const TrainOptions& options, const DenseMatrix* train_instances) {
  MrcModel model;
  model.variant = options.variant;
  model.features = std::move(features);
  model.uncertainty = set;
  const FeatureMap& fm = *model.features;

  SolverRun run;
  if (options.variant == ModelVariant::fixed_marginal) {
    if (!train_instances) throw InputError("the fixed-marginal variant needs the training instances");
    model.anchor = *train_instances;
    FixedMarginalObjective objective(set, model.anchor, fm);
    run = solve(objective, options.solver);
  } else if (!options.implicit_pieces && fm.num_classes() <= kMaxEnumeratedClasses) {
    model.anchor = anchor;
    const PiecewiseLinearProblem problem = build_learning_problem(set, anchor, fm);
    model.num_pieces = problem.num_pieces();
    run = solve(problem, options.solver);
  } else {
    model.anchor = anchor;
    TopKLearningObjective objective(set, anchor, fm);
    run = solve(objective, options.solver);
  }
  model.mu_star = run.best_mu;
  model.minimax_risk = clamp01(run.best_value);
  model.upper_solve = summarize(run, run.best_value);
  model.trace = std::move(run.trace);
  model.phi_star = phi(model.mu_star, model.anchor, fm);

  if (options.compute_lower && options.variant == ModelVariant::standard) {
    const DenseMatrix rule = rule_table(model, model.anchor, false);
    const PiecewiseLinearProblem lower = build_lower_bound_problem(set, model.anchor, fm, rule);
    SolverRun lower_run;
    if (options.implicit_pieces && options.solver.method != SolverMethod::lp) {
      lower_run = solve(PiecewiseObjective(lower), options.solver);
    } else {
      lower_run = solve(lower, options.solver);
    }
    const double raw = lower.reported(lower_run.best_value);
    model.lower_bound = clamp01(raw);
    model.mu_lower = lower_run.best_mu;
    model.lower_solve = summarize(lower_run, raw);
  }
  return model;
}

MrcModel train(const Dataset& train, FeatureMapSpec spec, const TrainOptions& options, Notices* notices) {
  if (train.n() < 2) throw InputError("training needs at least two samples");
  if (train.num_classes() < 2) throw InputError("training needs at least two classes");
  NormalizationStats stats;
  DenseMatrix x = train.instances;
  if (options.normalize) {
    stats = fit_normalizer(train.instances);
    x = apply_normalizer(stats, train.instances);
  }
  if (spec.kind == FeatureKind::identity) {
    spec = identity_spec(x, train.num_classes(), spec.constant_feature);
  } else {
    spec.num_classes = train.num_classes();
    spec.input_dim = train.d();
  }
  auto features = std::make_shared<const FeatureMap>(spec);
  UncertaintySet set = estimate_uncertainty(x, train.labels, *features, options.estimate);

  DenseMatrix anchor = x;
  if (options.anchor && options.variant == ModelVariant::standard) {
    if (options.anchor->cols() != train.d()) throw InputError("anchor instances have the wrong dimension");
    anchor = options.normalize ? apply_normalizer(stats, *options.anchor) : *options.anchor;
    // The empirical distribution keeps the set nonempty only when the anchor
    // holds the training instances, so other anchors are checked.
    set = ensure_feasible(set, anchor, *features);
    if (set.provenance.repaired && notices) {
      notices->push_back("uncertainty set was empty over the anchor instances; confidence widths were enlarged");
    }
  }
  MrcModel model = fit(set, anchor, std::move(features), options, &x);
  model.normalization = std::move(stats);
  model.label_names = train.label_names;
  return model;
}

Vector predict_proba(const MrcModel& model, std::span<const double> x) {
  const Vector z = normalize_instance(model, x);
  Vector scores(model.num_classes());
  scores_for(model, z, scores);
  return distribution_from_scores(model, scores);
}

std::size_t predict(const MrcModel& model, std::span<const double> x) {
  const Vector z = normalize_instance(model, x);
  Vector scores(model.num_classes());
  scores_for(model, z, scores);
  return kernels::argmax(scores);
}

Vector fixed_marginal_proba(const MrcModel& model, std::span<const double> x, Notices* notices) {
  if (model.variant != ModelVariant::fixed_marginal) throw InputError("model is not a fixed-marginal model");
  const Vector z = normalize_instance(model, x);
  Vector scores(model.num_classes());
  scores_for(model, z, scores);
  return fixed_marginal_from_scores(scores, notices);
}

double normalization_constant(const MrcModel& model, std::span<const double> x) {
  const Vector z = normalize_instance(model, x);
  Vector scores(model.num_classes());
  scores_for(model, z, scores);
  double c = 0.0;
  for (double s : scores) c += std::max(0.0, s - model.phi_star);
  return c;
}

DenseMatrix rule_table(const MrcModel& model, const DenseMatrix& normalized_instances, bool deterministic) {
  const std::size_t classes = model.num_classes();
  DenseMatrix table(normalized_instances.rows(), classes);
  const DenseMatrix psi = model.features->transform(normalized_instances);
  Vector scores(classes);
  for (std::size_t i = 0; i < psi.rows(); ++i) {
    model.features->class_scores(psi.row(i), model.mu_star, scores);
    auto out = table.row(i);
    if (deterministic) {
      out[kernels::argmax(scores)] = 1.0;
    } else {
      const Vector h = distribution_from_scores(model, scores);
      std::copy(h.begin(), h.end(), out.begin());
    }
  }
  return table;
}

Evaluation evaluate(const MrcModel& model, const Dataset& test) {
  if (test.n() == 0) throw InputError("evaluation set is empty");
  Evaluation e;
  for (std::size_t i = 0; i < test.n(); ++i) {
    const Vector z = normalize_instance(model, test.instances.row(i));
    Vector scores(model.num_classes());
    scores_for(model, z, scores);
    const Vector h = distribution_from_scores(model, scores);
    e.randomized_risk += 1.0 - h[test.labels[i]];
    e.deterministic_error += kernels::argmax(scores) != test.labels[i] ? 1.0 : 0.0;
  }
  e.randomized_risk /= static_cast<double>(test.n());
  e.deterministic_error /= static_cast<double>(test.n());
  return e;
}

RuleBounds bounds_for_rule(const UncertaintySet& set, const DenseMatrix& anchor, const FeatureMap& features,
                           const DenseMatrix& rule, const SolverConfig& config) {
  const PiecewiseLinearProblem upper = build_upper_bound_problem(set, anchor, features, rule);
  const SolverRun upper_run = solve(upper, config);
  const PiecewiseLinearProblem lower = build_lower_bound_problem(set, anchor, features, rule);
  const SolverRun lower_run = solve(lower, config);
  RuleBounds b;
  const double upper_raw = upper.reported(upper_run.best_value);
  const double lower_raw = lower.reported(lower_run.best_value);
  b.upper = clamp01(upper_raw);
  b.lower = clamp01(lower_raw);
  b.upper_solve = summarize(upper_run, upper_raw);
  b.lower_solve = summarize(lower_run, lower_raw);
  b.mu_upper = upper_run.best_mu;
  b.mu_lower = lower_run.best_mu;
  return b;
}

Interval high_confidence_bounds(const MrcModel& model, std::span<const double> lambda_delta,
                                std::span<const double> mu_lower) {
  const Vector& lambda = model.uncertainty.lambda;
  if (lambda_delta.size() != lambda.size() || mu_lower.size() != lambda.size()) {
    throw InputError("confidence vector length does not match the model");
  }
  if (!model.lower_bound || !model.lower_solve) throw InputError("model has no lower bound");
  double widen_lower = 0.0, widen_upper = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double extra = lambda_delta[i] - lambda[i];
    if (extra < 0.0) {
      throw InputError("high-confidence widths must not be below the model's (component " + std::to_string(i) + ")");
    }
    widen_lower += extra * std::abs(mu_lower[i]);
    widen_upper += extra * std::abs(model.mu_star[i]);
  }
  Interval out;
  out.lo_raw = model.lower_solve->raw_value - widen_lower;
  out.hi_raw = model.upper_solve.raw_value + widen_upper;
  out.lo = clamp01(out.lo_raw);
  out.hi = clamp01(out.hi_raw);
  return out;
}

Diagnostics diagnostics(const MrcModel& model, std::span<const double> tau_inf) {
  const Vector& tau = model.uncertainty.tau;
  const Vector& lambda = model.uncertainty.lambda;
  if (tau_inf.size() != tau.size()) throw InputError("exact expectation has the wrong length");
  Diagnostics d;
  d.covered = true;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double excess = std::abs(tau_inf[i] - tau[i]) - lambda[i];
    if (excess > 0.0) d.covered = false;
    d.upper_correction += excess * std::abs(model.mu_star[i]);
    if (!model.mu_lower.empty()) d.lower_correction += excess * std::abs(model.mu_lower[i]);
  }
  return d;
}

double exact_risk_finite(const MrcModel& model, std::span<const SupportPoint> support) {
  double total = 0.0;
  for (const SupportPoint& s : support) {
    if (!(s.probability >= 0.0)) throw InputError("support probabilities must be nonnegative");
    if (s.label >= model.num_classes()) throw InputError("support label out of range");
    total += s.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("support probabilities do not sum to one");
  double risk = 0.0;
  for (const SupportPoint& s : support) risk += s.probability * (1.0 - predict_proba(model, s.x)[s.label]);
  return risk;
}

double epsilon_s(std::size_t s, std::size_t m, std::size_t num_classes, double delta) {
  if (s < 1) throw InputError("epsilon_s needs s >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  const double y = static_cast<double>(num_classes);
  const double sd = static_cast<double>(s);
  const double inner = 4.0 + y * static_cast<double>(m + 1) * std::log(sd) + std::log(y / delta);
  return 6.0 * y * std::sqrt(inner / sd);
}

}  // namespace mrc
