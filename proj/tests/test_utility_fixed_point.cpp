#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "regal/example_model.hpp"
#include "regal/spectral.hpp"
#include "regal/utility_fixed_point.hpp"

using namespace regal;

namespace {

Preferences prefs(double beta, double rho, double gamma) {
  Preferences p;
  p.beta = beta;
  p.rho = rho;
  p.gamma = gamma;
  return p;
}

// single state, one atom, kappa = ln(delta): the recursion is exactly
// f -> H(1, delta f + varpi)
struct Singleton {
  MarketModel model;
  FramingSpec framing;

  Singleton(double delta, double varpi) {
    MarkovChain chain{1, {1.0}};
    const Atom atom[] = {{1.0, 1.0}};
    model = make_model_shared_atoms(chain, atom, {1.0});
    model.validate();
    framing = framing_constant(model, std::log(delta), {varpi});
  }
};

double closed_form_fixed_point(double beta, double rho, double delta) {
  if (std::abs(rho - 1.0) <= 1e-9) return std::pow(delta, beta / (1.0 - beta));
  const double q = beta * std::pow(delta, 1.0 - rho);
  return std::pow((1.0 - beta) / (1.0 - q), 1.0 / (1.0 - rho));
}

}  // namespace

TEST_CASE("one application of the recursion map") {
  const Singleton s(1.05, 0.0);
  const Preferences p = prefs(0.8, 0.5, 2.0);
  for (double f : {0.1, 1.0, 7.5}) {
    const UtilityFunction out = apply_recursion({{f}}, s.framing, s.model, p);
    CHECK(out.values[0] == doctest::Approx(aggregate(1.0, 1.05 * f, p)).epsilon(1e-13));
  }

  // zero start: positive constant below unit rho, absorbed at zero otherwise
  std::mt19937 rng(61);
  const MarketModel m = oracles::random_market(rng, 3, 0, 2);
  const FramingSpec fr = framing_constant(m, 0.02, {0.0, 0.0, 0.0});
  const UtilityFunction zero{std::vector<double>(3, 0.0)};
  const Preferences low = prefs(0.8, 0.5, 2.0);
  const UtilityFunction one_step = apply_recursion(zero, fr, m, low);
  for (double v : one_step.values)
    CHECK(v == doctest::Approx(std::pow(1.0 - low.beta, 2.0)).epsilon(1e-13));
  const Preferences high = prefs(0.8, 2.0, 2.0);
  for (double v : apply_recursion(zero, fr, m, high).values) CHECK(v == 0.0);
}

TEST_CASE("the recursion reports undefined states") {
  const Singleton s(1.0, -0.5);
  const UtilityFunction zero{{0.0}};
  try {
    apply_recursion(zero, s.framing, s.model, prefs(0.8, 2.0, 2.0));
    FAIL("expected domain_error");
  } catch (const domain_error& e) {
    REQUIRE(e.states().size() == 1);
    CHECK(e.states()[0] == 0);
  }
}

TEST_CASE("growth condition branches") {
  {
    const Singleton s(1.2, 0.0);
    const GrowthCheck g = growth_condition(s.framing, s.model, prefs(0.9, 1.0, 2.0));
    CHECK(g.pass);
    CHECK(g.product == doctest::Approx(0.9).epsilon(1e-14));
  }
  {
    const Singleton s(1.02, 0.0);
    const GrowthCheck g = growth_condition(s.framing, s.model, prefs(0.97, 0.5, 2.0));
    CHECK(g.delta == doctest::Approx(1.02).epsilon(1e-12));
    CHECK(g.product == doctest::Approx(0.97 * std::sqrt(1.02)).epsilon(1e-12));
    CHECK(g.pass);
  }
  {
    const Singleton s(0.5, 0.0);
    const GrowthCheck g = growth_condition(s.framing, s.model, prefs(0.9, 3.0, 2.0));
    CHECK(g.product == doctest::Approx(3.6).epsilon(1e-12));
    CHECK(!g.pass);
  }
}

TEST_CASE("singleton fixed points match the closed form") {
  for (auto [beta, rho, delta] : {std::tuple{0.8, 0.5, 1.05}, std::tuple{0.9, 2.0, 1.02},
                                  std::tuple{0.6, 1.0, 1.1}, std::tuple{0.937, 0.5, 0.98}}) {
    const Singleton s(delta, 0.0);
    const Preferences p = prefs(beta, rho, 2.0);
    IterateOptions opts;
    opts.tol = 1e-14;
    const IterationReport rep =
        iterate_recursion(default_start(s.framing, p), s.framing, s.model, p, opts);
    const double expect = closed_form_fixed_point(beta, rho, delta);
    CHECK(rep.fixed_point.values[0] == doctest::Approx(expect).epsilon(1e-10));
    CHECK(rep.final_residual <= 1e-14);
    // the fixed point really is fixed
    const UtilityFunction again = apply_recursion(rep.fixed_point, s.framing, s.model, p);
    CHECK(std::abs(again.values[0] - rep.fixed_point.values[0]) <= 1e-13);
  }
}

TEST_CASE("the example market with a fixed policy converges from far-apart starts") {
  const ModelFile file = example_two_state_market();
  Policy policy;
  policy.c = {0.06, 0.06};
  policy.theta = {0.5, 0.5};
  const FramingSpec fr = framing_from_policy(file.model, file.preferences, policy);
  IterateOptions opts;
  opts.tol = 1e-13;
  const auto low = iterate_recursion({std::vector<double>(2, 1e-3)}, fr, file.model,
                                     file.preferences, opts);
  const auto high = iterate_recursion({std::vector<double>(2, 1e3)}, fr, file.model,
                                      file.preferences, opts);
  for (int x = 0; x < 2; ++x)
    CHECK(std::abs(low.fixed_point.values[x] - high.fixed_point.values[x]) <= 1e-10);
  CHECK(low.growth.pass);
}

TEST_CASE("negative-framing start condition") {
  {
    // below-unit rho with a small loss passes at m = 1
    const Singleton s(1.0, -0.1);
    const NegativeFramingCheck c = check_negative_framing(s.framing, s.model, prefs(0.5, 0.5, 2.0));
    CHECK(c.status == NegativeFramingCheck::Status::pass);
    CHECK(c.m == 1);
  }
  {
    const Singleton s(1.0, 0.2);
    CHECK(check_negative_framing(s.framing, s.model, prefs(0.5, 0.5, 2.0)).status ==
          NegativeFramingCheck::Status::not_applicable);
  }
  {
    // above-unit rho: the floor is zero, so the map is undefined at the floor
    const Singleton s(1.0, -0.5);
    const NegativeFramingCheck c = check_negative_framing(s.framing, s.model, prefs(0.5, 2.0, 2.0));
    CHECK(c.status == NegativeFramingCheck::Status::fail);
    CHECK(c.reason == "domain");
  }
}

TEST_CASE("default start follows the sign of the gain-loss term") {
  const Singleton neg(1.0, -0.1);
  const Preferences p = prefs(0.5, 0.5, 2.0);
  CHECK(default_start(neg.framing, p).values[0] ==
        doctest::Approx(std::pow(0.5, 2.0)).epsilon(1e-14));
  const Singleton pos(1.0, 0.3);
  CHECK(default_start(pos.framing, p).values[0] == 1.0);
}

TEST_CASE("census of the single-state recursion") {
  {
    // no gain-loss: exactly the closed-form root
    const SingletonCensus c = analyze_singleton(1.05, 0.0, prefs(0.8, 0.5, 2.0));
    REQUIRE(c.count == 1);
    CHECK(c.roots[0] == doctest::Approx(closed_form_fixed_point(0.8, 0.5, 1.05)).epsilon(1e-9));
  }
  {
    // rho on whose domain the curve stays below the identity: no fixed point
    const SingletonCensus c = analyze_singleton(1.0, -0.5, prefs(0.5, 2.0, 2.0));
    CHECK(c.count == 0);
  }
  {
    // mildly negative loss: two crossings, the roots of f^2 - 1.1 f + 0.2
    const SingletonCensus c = analyze_singleton(1.0, -0.1, prefs(0.5, 2.0, 2.0));
    REQUIRE(c.count == 2);
    const double disc = std::sqrt(1.1 * 1.1 - 4.0 * 0.2);
    CHECK(c.roots[0] == doctest::Approx((1.1 - disc) / 2.0).epsilon(1e-9));
    CHECK(c.roots[1] == doctest::Approx((1.1 + disc) / 2.0).epsilon(1e-9));
  }
  {
    // below-unit rho with (1-beta)^(1/(1-rho)) > -varpi/delta: unique root
    const SingletonCensus c = analyze_singleton(1.0, -0.1, prefs(0.5, 0.5, 2.0));
    CHECK(c.count == 1);
  }
  {
    // below-unit rho, start below the identity: the roots of
    // 0.75 z - 0.5 sqrt(z) + 0.05 with z = f - 0.3
    const SingletonCensus c = analyze_singleton(1.0, -0.3, prefs(0.5, 0.5, 2.0));
    REQUIRE(c.count == 2);
    const double s = std::sqrt(0.25 - 0.15);
    const double t1 = (0.5 - s) / 1.5, t2 = (0.5 + s) / 1.5;
    CHECK(c.roots[0] == doctest::Approx(t1 * t1 + 0.3).epsilon(1e-9));
    CHECK(c.roots[1] == doctest::Approx(t2 * t2 + 0.3).epsilon(1e-9));
  }
  {
    // deep loss below-unit rho: no fixed point
    const SingletonCensus c = analyze_singleton(1.0, -0.5, prefs(0.98, 0.5, 2.0));
    CHECK(c.count == 0);
  }
}

TEST_CASE("census counts agree with a brute-force sign scan") {
  const struct {
    double beta, rho, varpi;
  } cases[] = {{0.5, 2.0, -0.5}, {0.5, 2.0, -0.1}, {0.5, 0.5, -0.1},
               {0.5, 0.5, -0.3}, {0.98, 0.5, -0.5}, {0.8, 0.5, 0.0}};
  for (const auto& cs : cases) {
    const Preferences p = prefs(cs.beta, cs.rho, 2.0);
    const SingletonCensus census = analyze_singleton(1.0, cs.varpi, p);
    const double lb = census.domain_lower;
    const auto excess = [&](double f) {
      return aggregate(1.0, std::max(f + cs.varpi, 0.0), p) - f;
    };
    const int crossings = oracles::grid_sign_changes(excess, lb, lb + 10.0, 200000);
    CHECK(crossings == census.count);
  }
}

TEST_CASE("recursion map is monotone and subhomogeneous") {
  std::mt19937 rng(67);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 4;
    const MarketModel m = oracles::random_market(rng, n, 0, 3);
    std::vector<double> varpi(n);
    for (double& v : varpi) v = 0.3 * u(rng);
    FramingSpec fr = make_framing(
        m, [&](int, int, int) { return 0.05 * (u(rng) - 1.0); }, varpi);
    const Preferences p =
        prefs(0.8, trial % 3 == 0 ? 1.0 : u(rng), trial % 2 ? 0.5 : 3.0);

    UtilityFunction f{std::vector<double>(n)}, g{std::vector<double>(n)};
    for (int x = 0; x < n; ++x) {
      f.values[x] = u(rng);
      g.values[x] = f.values[x] + u(rng);
    }
    const UtilityFunction Tf = apply_recursion(f, fr, m, p);
    const UtilityFunction Tg = apply_recursion(g, fr, m, p);
    for (int x = 0; x < n; ++x) CHECK(Tf.values[x] <= Tg.values[x] + 1e-13);

    const double r = 0.2 + 0.6 * u(rng) / 2.0;
    UtilityFunction rf = f;
    for (double& v : rf.values) v *= r;
    const UtilityFunction Trf = apply_recursion(rf, fr, m, p);
    for (int x = 0; x < n; ++x) {
      CHECK(Trf.values[x] >= r * Tf.values[x] - 1e-12);
      CHECK(Trf.values[x] > r * Tf.values[x]);  // strict: the certainty equivalent is positive
    }
  }
}

TEST_CASE("successful iteration leaves a small fixed-point residual") {
  std::mt19937 rng(71);
  const MarketModel m = oracles::random_market(rng, 4, 0, 2);
  const FramingSpec fr = framing_constant(m, -0.02, {0.0, 0.1, 0.2, 0.0});
  const Preferences p = prefs(0.9, 2.0, 3.0);
  const IterationReport rep = iterate_recursion(default_start(fr, p), fr, m, p, {});
  const UtilityFunction once = apply_recursion(rep.fixed_point, fr, m, p);
  for (int x = 0; x < 4; ++x)
    CHECK(std::abs(once.values[x] - rep.fixed_point.values[x]) <= 1e-12);
}

TEST_CASE("ten positive starts agree at the fixed point") {
  std::mt19937 rng(73);
  const MarketModel m = oracles::random_market(rng, 3, 0, 2);
  const FramingSpec fr = framing_constant(m, 0.01, {0.0, 0.05, 0.1});
  const Preferences p = prefs(0.85, 0.5, 8.0);
  IterateOptions opts;
  opts.tol = 1e-13;
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  std::vector<std::vector<double>> results;
  for (int s = 0; s < 10; ++s) {
    UtilityFunction start{std::vector<double>(3)};
    for (double& v : start.values) v = std::pow(10.0, scale(rng));
    results.push_back(iterate_recursion(start, fr, m, p, opts).fixed_point.values);
  }
  for (const auto& r : results)
    for (int x = 0; x < 3; ++x) CHECK(std::abs(r[x] - results[0][x]) <= 1e-9);
}

TEST_CASE("with a certified negative framing the fixed point dominates the floor") {
  std::mt19937 rng(79);
  const MarketModel m = oracles::random_market(rng, 3, 0, 2);
  const FramingSpec fr = framing_constant(m, 0.0, {-0.002, 0.05, 0.02});
  const Preferences p = prefs(0.8, 0.5, 2.0);
  const NegativeFramingCheck check = check_negative_framing(fr, m, p);
  REQUIRE(check.status == NegativeFramingCheck::Status::pass);
  const IterationReport rep = iterate_recursion(default_start(fr, p), fr, m, p, {});
  const UtilityFunction floor = gain_loss_floor(fr, p);
  for (int x = 0; x < 3; ++x) CHECK(rep.fixed_point.values[x] > floor.values[x]);
  REQUIRE(rep.negative_framing.has_value());
  CHECK(rep.negative_framing->status == NegativeFramingCheck::Status::pass);
}

TEST_CASE("iteration limit carries diagnostics") {
  const Singleton s(1.05, 0.0);
  const Preferences p = prefs(0.8, 0.5, 2.0);
  IterateOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = 3;
  try {
    iterate_recursion({{100.0}}, s.framing, s.model, p, opts);
    FAIL("expected iteration_limit_error");
  } catch (const iteration_limit_error& e) {
    CHECK(e.last_iterate().size() == 1);
    CHECK(e.previous_iterate().size() == 1);
    CHECK(e.residual_tail().size() == 3);
  }
}

TEST_CASE("residual contraction is eventually bounded by the growth product") {
  // alpha = (1-gamma)/(1-rho) = 1.4 >= 1
  const Singleton s(1.02, 0.0);
  const Preferences p = prefs(0.9, 0.5, 0.3);
  std::vector<double> trace;
  IterateOptions opts;
  opts.tol = 1e-13;
  opts.trace = &trace;
  const IterationReport rep =
      iterate_recursion({{5.0}}, s.framing, s.model, p, opts);
  const double bound = rep.growth.product + 1e-6;
  REQUIRE(trace.size() > 10);
  // residuals below ~1e-8 put rounding noise above the 1e-6 margin, so the
  // asymptotic-rate check stops there
  for (std::size_t i = trace.size() / 2; i + 1 < trace.size(); ++i)
    if (trace[i] > 1e-8) CHECK(trace[i + 1] / trace[i] <= bound);
}
