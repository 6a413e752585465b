#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <coxfold/penalties.hpp>
#include <coxfold/rng.hpp>
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <vector>

using coxfold::local_concavity;
using coxfold::Penalty;
using coxfold::penalty_deriv;
using coxfold::penalty_kind_from_string;
using coxfold::PenaltyKind;
using coxfold::penalty_value;
using coxfold::solve_univariate;
using coxfold::ValidationError;

namespace {

Penalty<double> lasso(double lam) { return Penalty<double>(PenaltyKind::lasso, lam); }
Penalty<double> scad(double lam, double a = 3.7) {
  return Penalty<double>(PenaltyKind::scad, lam, a);
}
Penalty<double> mcp(double lam, double a = 3.0) {
  return Penalty<double>(PenaltyKind::mcp, lam, a);
}
Penalty<double> sica(double lam) { return Penalty<double>(PenaltyKind::sica, lam); }

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("penalty values: closed forms") {
  CHECK(penalty_value(lasso(0.7), 0.0) == 0.0);
  CHECK(penalty_value(scad(1.0), 0.0) == 0.0);
  CHECK(penalty_value(mcp(1.0), 0.0) == 0.0);
  CHECK(penalty_value(sica(1.0), 0.0) == 0.0);

  CHECK(penalty_value(lasso(0.5), 2.0) == doctest::Approx(1.0));
  // Flat tail: lambda^2 (a + 1) / 2 with lambda = 1, a = 3.7.
  CHECK(penalty_value(scad(1.0), 5.0) == doctest::Approx(2.35));
  // Middle piece at lambda = 1, a = 3.7, t = 2:
  // (2 a lambda t - t^2 - lambda^2) / (2 (a - 1)).
  CHECK(penalty_value(scad(1.0), 2.0) ==
        doctest::Approx((2.0 * 3.7 * 2.0 - 4.0 - 1.0) / (2.0 * 2.7)));
  CHECK(penalty_value(mcp(1.0, 3.0), 1.0) == doctest::Approx(1.0 - 1.0 / 6.0));
  CHECK(penalty_value(mcp(1.0, 3.0), 5.0) == doctest::Approx(1.5));
  CHECK(penalty_value(sica(2.0), 2.0) == doctest::Approx(1.5));
}

TEST_CASE("penalty derivatives: closed forms") {
  const auto s = scad(1.0);
  CHECK(penalty_deriv(s, 0.5) == doctest::Approx(1.0));
  CHECK(penalty_deriv(s, 2.0) == doctest::Approx(1.7 / 2.7));
  CHECK(penalty_deriv(s, 4.0) == 0.0);

  CHECK(penalty_deriv(lasso(0.3), 0.0) == doctest::Approx(0.3));
  CHECK(penalty_deriv(lasso(0.3), 9.0) == doctest::Approx(0.3));

  const auto m = mcp(0.5, 3.0);
  CHECK(penalty_deriv(m, 0.0) == doctest::Approx(0.5));
  CHECK(penalty_deriv(m, 0.6) == doctest::Approx(0.5 - 0.2));
  CHECK(penalty_deriv(m, 2.0) == 0.0);

  // (lambda + 1) lambda / (lambda + t)^2.
  const auto si = sica(2.0);
  CHECK(penalty_deriv(si, 0.0) == doctest::Approx(6.0 / 4.0));
  CHECK(penalty_deriv(si, 2.0) == doctest::Approx(6.0 / 16.0));
}

TEST_CASE("derivative matches the slope of the value away from kinks") {
  coxfold::Rng rng(404);
  const std::vector<Penalty<double>> pens = {lasso(0.8), scad(0.6), mcp(0.9),
                                             sica(1.3)};
  for (const auto& pen : pens) {
    for (int i = 0; i < 40; ++i) {
      const double t = 0.05 + 4.0 * rng.uniform();
      const double h = 1e-6;
      const double slope =
          (penalty_value(pen, t + h) - penalty_value(pen, t - h)) / (2.0 * h);
      // Skip draws landing within 10 h of a kink.
      const double a = pen.a;
      const bool near_kink =
          std::abs(t - pen.lambda) < 10 * h ||
          std::abs(t - a * pen.lambda) < 10 * h;
      if (near_kink) continue;
      CHECK(penalty_deriv(pen, t) == doctest::Approx(slope).epsilon(1e-5));
    }
  }
}

TEST_CASE("folded-concave shape: zero at zero, nondecreasing, concave, "
          "positive slope at the origin") {
  for (const auto& pen :
       {lasso(0.5), scad(0.7), mcp(0.4), sica(0.9)}) {
    CHECK(penalty_value(pen, 0.0) == 0.0);
    CHECK(penalty_deriv(pen, 0.0) > 0.0);
    double prev = 0.0;
    double prev_deriv = penalty_deriv(pen, 0.0);
    for (int k = 1; k <= 400; ++k) {
      const double t = 0.02 * k;
      const double v = penalty_value(pen, t);
      CHECK(v >= prev - 1e-12);
      prev = v;
      const double dv = penalty_deriv(pen, t);
      CHECK(dv <= prev_deriv + 1e-12);
      CHECK(dv >= 0.0);
      prev_deriv = dv;
    }
  }
}

TEST_CASE("local concavity bounds") {
  CHECK(local_concavity(lasso(0.5), vec({1.0, 2.0})).kappa == 0.0);

  // With lambda = 1, a = 3.7: |2| lies in [lambda, a lambda] so the middle
  // piece is active and kappa = 1 / (a - 1).
  CHECK(local_concavity(scad(1.0), vec({2.0, 5.0})).kappa ==
        doctest::Approx(1.0 / 2.7));
  // All magnitudes in the flat tail: locally linear, kappa = 0.
  CHECK(local_concavity(scad(1.0), vec({5.0, 7.0})).kappa == 0.0);
  // All magnitudes below lambda: first piece is linear too.
  CHECK(local_concavity(scad(1.0), vec({0.5, 0.2})).kappa == 0.0);

  CHECK(local_concavity(mcp(1.0, 3.0), vec({2.0, 9.0})).kappa ==
        doctest::Approx(1.0 / 3.0));
  CHECK(local_concavity(mcp(1.0, 3.0), vec({4.0, 9.0})).kappa == 0.0);

  // 2 (lambda + 1) / (lambda + min |v|)^3.
  CHECK(local_concavity(sica(1.0), vec({1.0, 3.0})).kappa ==
        doctest::Approx(4.0 / 8.0));

  CHECK_THROWS_AS(local_concavity(scad(1.0), vec({})), ValidationError);
  CHECK_THROWS_AS(local_concavity(scad(1.0), vec({1.0, 0.0})),
                  ValidationError);
}

TEST_CASE("one-dimensional update: closed forms") {
  // Soft threshold: (3 - 1) / 1 with n * lambda = 1.
  CHECK(solve_univariate(lasso(1.0), 3.0, 1.0, 1) == doctest::Approx(2.0));
  CHECK(solve_univariate(lasso(1.0), -3.0, 1.0, 1) == doctest::Approx(-2.0));
  // At or below the threshold the update is exactly zero.
  CHECK(solve_univariate(lasso(1.0), 1.0, 1.0, 1) == 0.0);
  CHECK(solve_univariate(lasso(2.0), 3.0, 1.0, 2) == 0.0);  // n lambda = 4

  CHECK(solve_univariate(scad(1.0), 0.0, 1.0, 1) == 0.0);
  CHECK(solve_univariate(mcp(1.0), 0.0, 2.0, 5) == 0.0);
  CHECK(solve_univariate(sica(1.0), 0.0, 1.5, 3) == 0.0);

  // Small slope stays at zero under the folded-concave threshold.
  CHECK(solve_univariate(scad(1.0), 0.5, 1.0, 1) == 0.0);
}

TEST_CASE("quadratic-region tail is unbiased: large signals pass through") {
  // Beyond a * lambda the penalty is flat, so the maximizer is exactly g / h.
  const double g = 9.0, h = 1.5;
  CHECK(solve_univariate(scad(1.0), g, h, 1) == g / h);
  CHECK(solve_univariate(mcp(1.0, 3.0), g, h, 1) == g / h);
  CHECK(solve_univariate(scad(0.2), -g, h, 2) == -g / h);
}

TEST_CASE("one-dimensional update beats an exhaustive grid") {
  coxfold::Rng rng(20240901);
  const PenaltyKind kinds[] = {PenaltyKind::lasso, PenaltyKind::scad,
                               PenaltyKind::mcp, PenaltyKind::sica};
  for (int trial = 0; trial < 100; ++trial) {
    const PenaltyKind kind = kinds[trial % 4];
    const double lam = 0.01 + 1.99 * rng.uniform();
    double a = std::numeric_limits<double>::quiet_NaN();
    if (kind == PenaltyKind::scad) a = 2.2 + 3.0 * rng.uniform();
    if (kind == PenaltyKind::mcp) a = 1.2 + 3.0 * rng.uniform();
    const Penalty<double> pen(kind, lam, a);

    const double g = (rng.uniform() - 0.5) * 16.0;
    const double h = 0.05 + 3.95 * rng.uniform();
    const Eigen::Index n = (trial % 3 == 0) ? 1 : (trial % 3 == 1 ? 7 : 50);

    const double u = solve_univariate(pen, g, h, n);
    // The objective helper works on the sign-reduced problem (u >= 0).
    CHECK(u * g >= 0.0);
    const double f_solver = coxfold::detail::univariate_objective(
        pen, std::abs(g), h, static_cast<double>(n), std::abs(u));
    const double f_grid = refcheck::grid_best_objective(pen, g, h, n);
    CHECK(f_solver >= f_grid - 1e-9);
  }
}

TEST_CASE("construction and parsing are validated") {
  CHECK_THROWS_AS(Penalty<double>(PenaltyKind::lasso, 0.0), ValidationError);
  CHECK_THROWS_AS(Penalty<double>(PenaltyKind::lasso, -1.0), ValidationError);
  CHECK_THROWS_AS(Penalty<double>(PenaltyKind::scad, 1.0, 2.0),
                  ValidationError);
  CHECK_THROWS_AS(Penalty<double>(PenaltyKind::mcp, 1.0, 0.9),
                  ValidationError);
  CHECK_NOTHROW(Penalty<double>(PenaltyKind::mcp, 1.0, 1.0));
  CHECK_NOTHROW(Penalty<double>(PenaltyKind::scad, 1.0, 2.1));

  CHECK(penalty_kind_from_string("scad") == PenaltyKind::scad);
  CHECK(penalty_kind_from_string("lasso") == PenaltyKind::lasso);
  CHECK(penalty_kind_from_string("mcp") == PenaltyKind::mcp);
  CHECK(penalty_kind_from_string("sica") == PenaltyKind::sica);
  CHECK_THROWS(penalty_kind_from_string("ridge"));

  CHECK(coxfold::to_string(PenaltyKind::scad) == "scad");

  // Default shapes.
  CHECK(scad(1.0).a == doctest::Approx(3.7));
  CHECK(mcp(1.0).a == doctest::Approx(3.0));

  // Rebinding the level keeps the shape.
  const auto p2 = scad(1.0, 2.5).with_lambda(0.4);
  CHECK(p2.lambda == 0.4);
  CHECK(p2.a == 2.5);
}

TEST_CASE("one-dimensional update validates its inputs") {
  CHECK_THROWS_AS(solve_univariate(lasso(1.0), 1.0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(solve_univariate(lasso(1.0), 1.0, -2.0, 1),
                  ValidationError);
  CHECK_THROWS_AS(
      solve_univariate(lasso(1.0), std::numeric_limits<double>::quiet_NaN(),
                       1.0, 1),
      coxfold::NumericError);
}

TEST_CASE("penalty spec binds level to kind and shape") {
  coxfold::PenaltySpec<double> spec(PenaltyKind::scad);
  const auto pen = spec.at(0.25);
  CHECK(pen.kind == PenaltyKind::scad);
  CHECK(pen.lambda == 0.25);
  CHECK(pen.a == doctest::Approx(3.7));
}
