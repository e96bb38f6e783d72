#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mrc/classifier.hpp"
#include "mrc/errors.hpp"
#include "support.hpp"

using namespace mrc;

namespace {

// One-dimensional identity features with psi(1) = (1): the class scores at
// x = 1 are the entries of mu.
MrcModel score_model(Vector mu, double phi_star, ModelVariant variant = ModelVariant::standard) {
  DenseMatrix one(1, 1, 1.0);
  MrcModel model;
  model.variant = variant;
  model.features = std::make_shared<const FeatureMap>(identity_spec(one, mu.size()));
  model.mu_star = std::move(mu);
  model.phi_star = phi_star;
  model.label_names.resize(model.mu_star.size());
  return model;
}

SolverConfig exact() {
  SolverConfig c;
  c.method = SolverMethod::lp;
  return c;
}

TrainOptions lp_options(double lambda0) {
  TrainOptions o;
  o.solver = exact();
  o.estimate.lambda0 = lambda0;
  return o;
}

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

TEST_CASE("very wide sets force the uniform rule") {
  const auto data = testing::blobs(30, 3, 2, 2.0, 4);
  TrainOptions o = lp_options(1e3);
  const MrcModel model = train(data, fourier_spec(2, 3, 4, 1.0, 4), o);
  CHECK(model.minimax_risk == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(l1(model.mu_star) <= 1e-9);
  REQUIRE(model.lower_bound);
  CHECK(*model.lower_bound <= model.minimax_risk + 1e-9);
  const Vector h = predict_proba(model, data.instances.row(0));
  for (double v : h) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("a single exactly known point has zero minimax risk") {
  DenseMatrix x(1, 2);
  x(0, 0) = 0.4;
  x(0, 1) = -0.7;
  auto fm = std::make_shared<const FeatureMap>(fourier_spec(2, 3, 5, 1.0, 11));
  UncertaintySet set;
  set.tau = (*fm)(x.row(0), 1);
  set.lambda.assign(fm->size(), 0.0);
  TrainOptions o = lp_options(0.0);
  const MrcModel model = fit(set, x, fm, o, &x);
  CHECK(std::abs(model.minimax_risk) <= 1e-9);
  CHECK(predict_proba(model, x.row(0))[1] == doctest::Approx(1.0));
}

TEST_CASE("separable blobs") {
  const auto data = testing::blobs(100, 2, 2, 6.0, 13);
  TrainOptions o;
  o.solver.max_iters = 20000;
  o.solver.restart_period = 2000;
  const MrcModel model = train(data, fourier_spec(2, 2, 500, 0.0, 13), o);
  CHECK(model.minimax_risk < 0.2);
  REQUIRE(model.lower_bound);
  CHECK(*model.lower_bound <= model.minimax_risk + 1e-9);
  CHECK(model.minimax_risk <= 0.5 + 1e-12);
  CHECK(evaluate(model, data).deterministic_error < 0.05);
}

TEST_CASE("probabilities from scores") {
  const MrcModel zero = score_model({0.0, 0.0, 0.0}, 0.0);
  for (double v : predict_proba(zero, Vector{1.0})) CHECK(v == 1.0 / 3.0);
  CHECK(predict(zero, Vector{1.0}) == 0);

  const MrcModel m = score_model({0.9, 0.1}, 0.1);
  const Vector h = predict_proba(m, Vector{1.0});
  CHECK(h[0] == doctest::Approx(1.0));
  CHECK(h[1] == 0.0);
  CHECK(normalization_constant(m, Vector{1.0}) == doctest::Approx(0.8));

  CHECK(predict(score_model({0.2, 0.7}, 0.0), Vector{1.0}) == 1);
  CHECK_THROWS_AS(predict(m, Vector{1.0, 2.0}), InputError);
}

TEST_CASE("fixed-marginal probabilities") {
  const MrcModel m = score_model({0.6, 0.2}, 0.0, ModelVariant::fixed_marginal);
  const Vector h = fixed_marginal_proba(m, Vector{1.0});
  CHECK(h[0] == doctest::Approx(0.7));
  CHECK(h[1] == doctest::Approx(0.3));
  for (double v : fixed_marginal_proba(score_model({0, 0, 0, 0}, 0.0, ModelVariant::fixed_marginal), Vector{1.0}))
    CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(fixed_marginal_proba(score_model({0.6, 0.2}, 0.0), Vector{1.0}), InputError);

  oracle::SplitMix rng(77);
  for (int t = 0; t < 500; ++t) {
    Vector mu(2 + t % 5);
    for (double& v : mu) v = 3.0 * rng.symmetric();
    Notices notices;
    const Vector p = fixed_marginal_proba(score_model(mu, 0.0, ModelVariant::fixed_marginal), Vector{1.0}, &notices);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
    CHECK(notices.empty());
  }
}

TEST_CASE("fixed-marginal training") {
  const auto data = testing::blobs(40, 3, 2, 3.0, 9);
  TrainOptions o;
  o.variant = ModelVariant::fixed_marginal;
  o.solver.max_iters = 3000;
  o.solver.restart_period = 1000;
  const MrcModel model = train(data, fourier_spec(2, 3, 10, 1.0, 9), o);
  CHECK_FALSE(model.lower_bound);
  CHECK(model.minimax_risk <= 2.0 / 3.0 + 1e-12);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Vector p = predict_proba(model, data.instances.row(i));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("randomized rules are valid and dominate the deterministic one") {
  oracle::SplitMix rng(5);
  const auto data = testing::blobs(60, 4, 3, 1.0, 5);
  for (int t = 0; t < 40; ++t) {
    MrcModel model;
    model.features = std::make_shared<const FeatureMap>(fourier_spec(3, 4, 6, 1.0, 100 + t));
    model.mu_star.resize(model.features->size());
    for (double& v : model.mu_star) v = rng.symmetric();
    model.anchor = data.instances;
    model.phi_star = phi(model.mu_star, model.anchor, *model.features);
    const DenseMatrix h = rule_table(model, data.instances, false);
    const DenseMatrix hd = rule_table(model, data.instances, true);
    for (std::size_t i = 0; i < data.n(); ++i) {
      double total = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        CHECK(h(i, y) >= 0.0);
        CHECK(h(i, y) <= 1.0);
        total += h(i, y);
        CHECK(1.0 - hd(i, y) <= 2.0 * (1.0 - h(i, y)) + 1e-12);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(normalization_constant(model, data.instances.row(i)) <= 1.0 + 1e-12);
    }
    const Evaluation e = evaluate(model, data);
    CHECK(e.deterministic_error <= 2.0 * e.randomized_risk + 1e-12);
  }
}

TEST_CASE("evaluation") {
  const auto data = testing::blobs(20, 3, 1, 0.0, 2);
  MrcModel uniform;
  uniform.features = std::make_shared<const FeatureMap>(fourier_spec(1, 3, 3, 1.0, 1));
  uniform.mu_star.assign(uniform.features->size(), 0.0);
  const Evaluation e = evaluate(uniform, data);
  CHECK(e.randomized_risk == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  // Identity scores that always point at the true class.
  Dataset d;
  d.label_names = {"a", "b"};
  d.instances = DenseMatrix(2, 1, 1.0);
  d.labels = {0, 0};
  const MrcModel right = score_model({1.0, -1.0}, 0.0);
  CHECK(evaluate(right, d).deterministic_error == 0.0);
  CHECK_THROWS_AS(evaluate(right, Dataset{}), InputError);
}

TEST_CASE("bounds of a given rule") {
  const auto data = testing::blobs(25, 3, 2, 2.0, 31);
  const TrainOptions o = lp_options(0.3);
  const MrcModel model = train(data, fourier_spec(2, 3, 4, 1.0, 31), o);
  REQUIRE(model.lower_bound);

  // The learning problem's optimum is also the worst-case risk of its rule.
  const DenseMatrix rule = rule_table(model, model.anchor, false);
  const RuleBounds b = bounds_for_rule(model.uncertainty, model.anchor, *model.features, rule, exact());
  CHECK(b.upper == doctest::Approx(model.minimax_risk).epsilon(1e-7));
  CHECK(b.lower == doctest::Approx(*model.lower_bound).epsilon(1e-7));
  CHECK(b.lower <= b.upper + 1e-9);
  CHECK(b.upper_solve.certified);

  const DenseMatrix det = rule_table(model, model.anchor, true);
  const RuleBounds bd = bounds_for_rule(model.uncertainty, model.anchor, *model.features, det, exact());
  CHECK(bd.lower <= bd.upper + 1e-9);

  UncertaintySet wide = model.uncertainty;
  for (double& l : wide.lambda) l = 1e3;
  const DenseMatrix uniform(model.anchor.rows(), 3, 1.0 / 3.0);
  const RuleBounds bu = bounds_for_rule(wide, model.anchor, *model.features, uniform, exact());
  CHECK(bu.upper == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(bu.lower == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("high-confidence intervals") {
  const auto data = testing::blobs(25, 2, 2, 2.0, 3);
  const MrcModel model = train(data, fourier_spec(2, 2, 4, 1.0, 3), lp_options(0.3));
  const Vector& lambda = model.uncertainty.lambda;
  const Interval same = high_confidence_bounds(model, lambda, model.mu_lower);
  CHECK(same.hi_raw == model.upper_solve.raw_value);
  CHECK(same.lo_raw == model.lower_solve->raw_value);

  Vector wider = lambda;
  for (double& l : wider) l += 0.05;
  const Interval w = high_confidence_bounds(model, wider, model.mu_lower);
  CHECK(w.hi_raw == doctest::Approx(model.upper_solve.raw_value + 0.05 * l1(model.mu_star)).epsilon(1e-14));
  CHECK(w.lo_raw <= same.lo_raw);
  CHECK(w.hi_raw >= same.hi_raw);
  CHECK(w.lo >= 0.0);
  CHECK(w.hi <= 1.0);

  Vector narrower = lambda;
  narrower[0] -= 1e-3;
  CHECK_THROWS_AS(high_confidence_bounds(model, narrower, model.mu_lower), InputError);
}

TEST_CASE("diagnostics") {
  const auto data = testing::blobs(25, 2, 2, 2.0, 3);
  const MrcModel model = train(data, fourier_spec(2, 2, 4, 1.0, 3), lp_options(0.3));
  const Vector& tau = model.uncertainty.tau;
  const Vector& lambda = model.uncertainty.lambda;
  const Diagnostics d = diagnostics(model, tau);
  double expect_u = 0.0, expect_l = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    expect_u -= lambda[i] * std::abs(model.mu_star[i]);
    expect_l -= lambda[i] * std::abs(model.mu_lower[i]);
  }
  CHECK(d.upper_correction == doctest::Approx(expect_u).epsilon(1e-14));
  CHECK(d.lower_correction == doctest::Approx(expect_l).epsilon(1e-14));
  CHECK(d.covered);

  Vector shifted = tau;
  for (std::size_t i = 0; i < tau.size(); ++i) shifted[i] += lambda[i];
  const Diagnostics e = diagnostics(model, shifted);
  CHECK(std::abs(e.upper_correction) <= 1e-12);
  CHECK(std::abs(e.lower_correction) <= 1e-12);
  CHECK_THROWS_AS(diagnostics(model, Vector{1.0}), InputError);
}

TEST_CASE("risk of a finite distribution") {
  const MrcModel sure = score_model({0.9, 0.1}, 0.1);
  const std::vector<SupportPoint> mass{{Vector{1.0}, 0, 1.0}};
  CHECK(exact_risk_finite(sure, mass) == 0.0);
  const MrcModel uniform = score_model({0.0, 0.0, 0.0}, 0.0);
  const std::vector<SupportPoint> spread{{Vector{1.0}, 0, 0.2}, {Vector{1.0}, 2, 0.8}};
  CHECK(exact_risk_finite(uniform, spread) == doctest::Approx(2.0 / 3.0));
  const std::vector<SupportPoint> bad{{Vector{1.0}, 0, 0.5}};
  CHECK_THROWS_AS(exact_risk_finite(uniform, bad), InputError);

  // Equal weights over a dataset reproduce the empirical randomized risk.
  const auto data = testing::blobs(30, 3, 2, 1.0, 8);
  MrcModel model;
  model.features = std::make_shared<const FeatureMap>(fourier_spec(2, 3, 4, 1.0, 8));
  oracle::SplitMix rng(8);
  model.mu_star.resize(model.features->size());
  for (double& v : model.mu_star) v = rng.symmetric();
  model.phi_star = phi(model.mu_star, data.instances, *model.features);
  std::vector<SupportPoint> empirical;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto row = data.instances.row(i);
    empirical.push_back({Vector(row.begin(), row.end()), data.labels[i], 1.0 / 30.0});
  }
  CHECK(exact_risk_finite(model, empirical) == doctest::Approx(evaluate(model, data).randomized_risk).epsilon(1e-12));
}

TEST_CASE("reduced-set deviation term") {
  CHECK(epsilon_s(1, 10, 3, 0.05) == doctest::Approx(18.0 * std::sqrt(4.0 + std::log(3.0 / 0.05))));
  double prev = epsilon_s(1000, 10, 2, 0.05);
  for (std::size_t s = 2000; s <= 1000000; s *= 2) {
    const double e = epsilon_s(s, 10, 2, 0.05);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(epsilon_s(100, 10, 2, 0.05) > 1.0);
  CHECK_THROWS_AS(epsilon_s(0, 10, 2, 0.05), InputError);
}

TEST_CASE("minimax risk grows with the confidence widths") {
  const auto data = testing::blobs(20, 3, 2, 1.5, 17);
  double prev = -1.0;
  for (double l0 : {0.0, 0.1, 0.3, 0.6, 1.0, 3.0}) {
    TrainOptions o = lp_options(l0);
    o.compute_lower = false;
    const MrcModel model = train(data, fourier_spec(2, 3, 4, 1.0, 17), o);
    CHECK(model.upper_solve.certified);
    CHECK(model.minimax_risk >= prev - 1e-6);
    prev = model.minimax_risk;
  }
}

TEST_CASE("external anchor sets are repaired when needed") {
  const auto data = testing::blobs(30, 2, 2, 2.0, 6);
  TrainOptions o = lp_options(0.0);
  o.compute_lower = false;
  o.anchor = data.instances.select_rows(std::vector<std::size_t>{0, 1});
  Notices notices;
  const MrcModel model = train(data, fourier_spec(2, 2, 4, 1.0, 6), o, &notices);
  CHECK(model.uncertainty.provenance.repaired);
  CHECK(notices.size() == 1);
  CHECK(model.anchor.rows() == 2);
}

TEST_CASE("implicit pieces give the same model") {
  const auto data = testing::blobs(30, 3, 2, 2.0, 19);
  TrainOptions o;
  o.solver.method = SolverMethod::easm_restart;
  o.solver.max_iters = 2000;
  o.solver.restart_period = 500;
  const MrcModel a = train(data, fourier_spec(2, 3, 4, 1.0, 19), o);
  o.implicit_pieces = true;
  const MrcModel b = train(data, fourier_spec(2, 3, 4, 1.0, 19), o);
  CHECK(b.num_pieces == 0);
  CHECK(b.minimax_risk == doctest::Approx(a.minimax_risk).epsilon(1e-9));
  CHECK(testing::relative_difference(a.mu_star, b.mu_star) <= 1e-9);
}
