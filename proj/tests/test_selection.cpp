#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <coxfold/coxfold.hpp>
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <vector>

using coxfold::Criterion;
using coxfold::criterion_from_string;
using coxfold::cv_score;
using coxfold::Dataset;
using coxfold::FitConfig;
using coxfold::fit_ica;
using coxfold::FoldPlan;
using coxfold::index_list_t;
using coxfold::lambda_grid;
using coxfold::log_partial_likelihood;
using coxfold::make_folds;
using coxfold::mat_t;
using coxfold::Penalty;
using coxfold::PenaltyKind;
using coxfold::select_lambda;
using coxfold::SelectionResult;
using coxfold::sgcv_fold_term;
using coxfold::sgcv_score;
using coxfold::subset_rows;
using coxfold::to_string;
using coxfold::ValidationError;
using coxfold::vec_t;
using refcheck::make_instance;

namespace {

FitConfig<double> cfg_at(PenaltyKind kind, double lambda) {
  FitConfig<double> cfg;
  cfg.penalty = Penalty<double>(kind, lambda);
  return cfg;
}

/** Null log partial likelihood from risk-set cardinalities alone. */
double null_loglik(const Dataset<double>& data) {
  double l = 0.0;
  for (Eigen::Index j = 0; j < data.event_mult.size(); ++j) {
    l -= static_cast<double>(data.event_mult[j]) *
         std::log(static_cast<double>(data.risk_len[j]));
  }
  return l;
}

/** Held-in (all folds but k) row indices in original order. */
index_list_t held_in_rows(const FoldPlan& plan, Eigen::Index n, int k) {
  index_list_t rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (plan.assignment[static_cast<std::size_t>(i)] != k) rows.push_back(i);
  }
  return rows;
}

/** A penalty level so large that every fold fit stays at zero. */
double null_forcing_lambda(const Dataset<double>& data) {
  return 50.0 * lambda_grid(data, 1, 0.5)[0];
}

}  // namespace

// ---------------------------------------------------------------------------
// Fold plans
// ---------------------------------------------------------------------------

TEST_CASE("stratified folds balance events and censorings to within one "
          "subject") {
  const auto inst = make_instance(10, 3, 330, 0.25, 2, 1.0);
  // Build a 10-subject sample with exactly 5 events by flipping statuses.
  Eigen::Matrix<int, Eigen::Dynamic, 1> status(10);
  status << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0;
  const Dataset<double> data(inst.data.time, status, inst.data.X);

  const FoldPlan plan = make_folds(data, 5, 42);
  std::vector<int> events_per(5, 0), cens_per(5, 0);
  for (Eigen::Index i = 0; i < data.n; ++i) {
    const int k = plan.assignment[static_cast<std::size_t>(i)];
    (data.status[i] == 1 ? events_per : cens_per)[static_cast<std::size_t>(k)]++;
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(events_per[static_cast<std::size_t>(k)] == 1);
    CHECK(cens_per[static_cast<std::size_t>(k)] == 1);
  }
}

TEST_CASE("leave-one-out plans put each subject in its own fold") {
  const auto inst = make_instance(12, 3, 331);
  const FoldPlan plan = make_folds(inst.data, 12, 9);
  std::vector<int> count(12, 0);
  for (const int k : plan.assignment) count[static_cast<std::size_t>(k)]++;
  for (int k = 0; k < 12; ++k) {
    CHECK(count[static_cast<std::size_t>(k)] == 1);
  }
}

TEST_CASE("fold plans are deterministic in their seed") {
  const auto inst = make_instance(25, 4, 332);
  const FoldPlan a = make_folds(inst.data, 5, 1234);
  const FoldPlan b = make_folds(inst.data, 5, 1234);
  const FoldPlan c = make_folds(inst.data, 5, 1235);
  CHECK(a.assignment == b.assignment);
  CHECK(a.assignment != c.assignment);
}

TEST_CASE("fold counts outside [2, n] are rejected") {
  const auto inst = make_instance(8, 3, 333);
  CHECK_THROWS_AS(make_folds(inst.data, 1, 7), ValidationError);
  CHECK_THROWS_AS(make_folds(inst.data, 9, 7), ValidationError);
  CHECK_NOTHROW(make_folds(inst.data, 8, 7));
}

TEST_CASE("a fold whose held-in half has no events is an error naming the "
          "fold") {
  const auto inst = make_instance(4, 2, 334);
  Eigen::Matrix<int, Eigen::Dynamic, 1> status(4);
  status << 1, 0, 0, 0;
  const Dataset<double> data(inst.data.time, status, inst.data.X);

  // Fold 1's held-in rows are subjects 1 and 2, both censored.
  FoldPlan plan;
  plan.num_folds = 2;
  plan.assignment = {1, 0, 0, 1};

  const auto cfg = cfg_at(PenaltyKind::lasso, 0.5);
  CHECK_THROWS_WITH_AS(cv_score(data, plan, 0.5, cfg),
                       "fold 1: held-in data has zero events",
                       ValidationError);
}

// ---------------------------------------------------------------------------
// Score values at the all-null point
// ---------------------------------------------------------------------------

TEST_CASE("the cv score of an all-null fit follows from risk-set "
          "cardinalities") {
  const auto inst = make_instance(21, 5, 320);
  const FoldPlan plan = make_folds(inst.data, 2, 11);
  const double big = null_forcing_lambda(inst.data);
  const auto cfg = cfg_at(PenaltyKind::scad, big);

  double expected = 0.0;
  const double l_full0 = null_loglik(inst.data);
  for (int k = 0; k < 2; ++k) {
    const Dataset<double> sub =
        subset_rows(inst.data, held_in_rows(plan, inst.data.n, k));
    expected += null_loglik(sub) - l_full0;
  }
  const double got = cv_score(inst.data, plan, big, cfg);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  CHECK(got > 0.0);  // held-in null likelihood beats the full-sample one
}

TEST_CASE("the sgcv score of an all-null fit is the size-normalized null "
          "difference") {
  const auto inst = make_instance(21, 5, 320);
  const FoldPlan plan = make_folds(inst.data, 2, 11);
  const double big = null_forcing_lambda(inst.data);
  const auto cfg = cfg_at(PenaltyKind::lasso, big);

  double expected = 0.0;
  const double l_full0 = null_loglik(inst.data);
  for (int k = 0; k < 2; ++k) {
    const Dataset<double> sub =
        subset_rows(inst.data, held_in_rows(plan, inst.data.n, k));
    expected += null_loglik(sub) / static_cast<double>(sub.n) -
                l_full0 / static_cast<double>(inst.data.n);
  }
  const double got = sgcv_score(inst.data, plan, big, cfg);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sgcv fold terms: normalizer reduction, saturation and divergence "
          "sentinels") {
  // With no active coefficients the deflated normalizers reduce to the two
  // sample sizes.
  CHECK(sgcv_fold_term<double>(-10.0, -7.0, 25, 20, 0) ==
        doctest::Approx(-7.0 / 20.0 + 10.0 / 25.0).epsilon(1e-15));

  // General hand value.
  const double in_norm = 20.0 * (1.0 - 3.0 / 20.0) * (1.0 - 3.0 / 20.0);
  const double full_norm = 30.0 * (1.0 - 3.0 / 30.0) * (1.0 - 3.0 / 30.0);
  CHECK(sgcv_fold_term<double>(-12.5, -9.25, 30, 20, 3) ==
        doctest::Approx(-9.25 / in_norm + 12.5 / full_norm).epsilon(1e-15));

  // A model as large as the held-in sample poisons the level.
  CHECK(std::isinf(sgcv_fold_term<double>(-10.0, -7.0, 25, 20, 20)));
  CHECK(std::isinf(sgcv_fold_term<double>(-10.0, -7.0, 25, 20, 24)));
  CHECK_FALSE(std::isinf(sgcv_fold_term<double>(-10.0, -7.0, 25, 20, 19)));

  // So does a fold fit that ran out of sweeps without converging.
  CHECK(std::isinf(sgcv_fold_term<double>(-10.0, -7.0, 25, 20, 3, false)));
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

TEST_CASE("a single-level grid selects that level with a null fit") {
  const auto inst = make_instance(20, 4, 310);
  const vec_t<double> grid = lambda_grid(inst.data, 1, 0.1);
  const FoldPlan plan = make_folds(inst.data, 4, 3);
  const auto cfg = cfg_at(PenaltyKind::scad, grid[0]);

  const SelectionResult<double> sel =
      select_lambda(inst.data, plan, grid, Criterion::sgcv, cfg);
  CHECK(sel.lambda_hat == grid[0]);
  CHECK(sel.selected_index == 0);
  CHECK(sel.sparsity[0] == 0);
}

TEST_CASE("equal scores resolve to the larger penalty level") {
  const auto inst = make_instance(20, 4, 310);
  const double big = null_forcing_lambda(inst.data);
  vec_t<double> grid(2);
  grid[0] = 3.0 * big;
  grid[1] = 2.0 * big;  // both levels give identical all-null fold fits
  const FoldPlan plan = make_folds(inst.data, 4, 3);
  const auto cfg = cfg_at(PenaltyKind::lasso, grid[0]);

  for (const Criterion crit : {Criterion::cv, Criterion::sgcv}) {
    const SelectionResult<double> sel =
        select_lambda(inst.data, plan, grid, crit, cfg);
    CHECK(sel.cv_scores[0] == sel.cv_scores[1]);
    CHECK(sel.selected_index == 0);
    CHECK(sel.lambda_hat == grid[0]);
  }
}

TEST_CASE("duplicating every subject moves the scores but not the selected "
          "level") {
  const auto inst = make_instance(40, 8, 301);
  const vec_t<double> grid = lambda_grid(inst.data, 12, 0.1);
  const FoldPlan plan = make_folds(inst.data, 4, 77);
  const auto cfg = cfg_at(PenaltyKind::lasso, grid[0]);

  const SelectionResult<double> base =
      select_lambda(inst.data, plan, grid, Criterion::cv, cfg);
  CHECK(base.selected_index == 8);
  CHECK(base.cv_scores[base.selected_index] ==
        doctest::Approx(93.238351).epsilon(1e-6));

  // Interleave two copies of each subject; fold assignments follow suit so
  // both copies land in the same fold.
  const Eigen::Index n = inst.data.n;
  mat_t<double> x2(2 * n, inst.data.p);
  vec_t<double> t2(2 * n);
  Eigen::Matrix<int, Eigen::Dynamic, 1> s2(2 * n);
  FoldPlan plan2;
  plan2.num_folds = plan.num_folds;
  plan2.assignment.assign(static_cast<std::size_t>(2 * n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x2.row(2 * i) = inst.data.X.row(i);
    x2.row(2 * i + 1) = inst.data.X.row(i);
    t2[2 * i] = inst.data.time[i];
    t2[2 * i + 1] = inst.data.time[i];
    s2[2 * i] = inst.data.status[i];
    s2[2 * i + 1] = inst.data.status[i];
    plan2.assignment[static_cast<std::size_t>(2 * i)] =
        plan.assignment[static_cast<std::size_t>(i)];
    plan2.assignment[static_cast<std::size_t>(2 * i + 1)] =
        plan.assignment[static_cast<std::size_t>(i)];
  }
  const Dataset<double> doubled(t2, s2, x2);
  const SelectionResult<double> twice =
      select_lambda(doubled, plan2, grid, Criterion::cv, cfg);

  CHECK(twice.selected_index == base.selected_index);
  CHECK(twice.cv_scores[twice.selected_index] !=
        doctest::Approx(base.cv_scores[base.selected_index]));
}

TEST_CASE("held-in likelihoods match an independently rebuilt dataset") {
  const auto inst = make_instance(30, 6, 340);
  const FoldPlan plan = make_folds(inst.data, 3, 21);
  const double lambda = lambda_grid(inst.data, 10, 0.1)[4];
  const auto cfg = cfg_at(PenaltyKind::scad, lambda);

  double manual = 0.0;
  for (int k = 0; k < 3; ++k) {
    const index_list_t rows = held_in_rows(plan, inst.data.n, k);
    // Rebuild the held-in sample from the raw arrays rather than through
    // subset_rows, so the comparison exercises an independent path.
    const auto m = static_cast<Eigen::Index>(rows.size());
    mat_t<double> x(m, inst.data.p);
    vec_t<double> t(m);
    Eigen::Matrix<int, Eigen::Dynamic, 1> s(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index i = rows[static_cast<std::size_t>(r)];
      x.row(r) = inst.data.X.row(i);
      t[r] = inst.data.time[i];
      s[r] = inst.data.status[i];
    }
    const Dataset<double> sub(t, s, x);
    const auto fit = fit_ica(sub, cfg);
    manual += log_partial_likelihood(sub, fit.beta) -
              log_partial_likelihood(inst.data, fit.beta);
  }
  const double got = cv_score(inst.data, plan, lambda, cfg);
  CHECK(got == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("levels whose fold fits stop converging are excluded from the sgcv "
          "argmin") {
  // p > n with a tight sweep budget: deep levels leave fold fits
  // unconverged.  sgcv refuses those levels outright, cv keeps scoring
  // them (finitely) and here settles on a denser model than sgcv.
  const auto inst = make_instance(40, 60, 404);
  const vec_t<double> grid = lambda_grid(inst.data, 25, 0.02);
  const FoldPlan plan = make_folds(inst.data, 4, 7);
  auto cfg = cfg_at(PenaltyKind::lasso, grid[0]);
  cfg.max_sweeps = 40;

  const SelectionResult<double> cv_sel =
      select_lambda(inst.data, plan, grid, Criterion::cv, cfg);
  const SelectionResult<double> sgcv_sel =
      select_lambda(inst.data, plan, grid, Criterion::sgcv, cfg);

  bool any_poisoned = false;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(std::isfinite(cv_sel.cv_scores[i]));
    if (std::isinf(sgcv_sel.sgcv_scores[i])) any_poisoned = true;
  }
  CHECK(any_poisoned);
  CHECK(std::isfinite(sgcv_sel.sgcv_scores[sgcv_sel.selected_index]));

  // The denser-under-cv contrast, pinned for this instance.
  CHECK(cv_sel.sparsity[cv_sel.selected_index] >
        sgcv_sel.sparsity[sgcv_sel.selected_index]);
  CHECK(cv_sel.selected_index == 10);
  CHECK(sgcv_sel.selected_index == 7);
  CHECK(cv_sel.sparsity[cv_sel.selected_index] < inst.data.n);
  CHECK(sgcv_sel.sparsity[sgcv_sel.selected_index] < inst.data.n);
}

TEST_CASE("selection is deterministic and minimizes its criterion over "
          "eligible levels") {
  const auto inst = make_instance(40, 8, 301);
  const vec_t<double> grid = lambda_grid(inst.data, 12, 0.1);
  const FoldPlan plan = make_folds(inst.data, 4, 77);
  const auto cfg = cfg_at(PenaltyKind::scad, grid[0]);

  const SelectionResult<double> a =
      select_lambda(inst.data, plan, grid, Criterion::sgcv, cfg);
  const SelectionResult<double> b =
      select_lambda(inst.data, plan, grid, Criterion::sgcv, cfg);

  CHECK(a.selected_index == b.selected_index);
  // Bitwise reproducible scores.
  CHECK((a.cv_scores.array() == b.cv_scores.array()).all());
  CHECK((a.sgcv_scores.array() == b.sgcv_scores.array()).all());

  // The reported argmin is the straightforward scan over eligible levels,
  // first (larger) level winning ties.
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (a.sparsity[i] >= inst.data.n) continue;
    if (best < 0 || a.sgcv_scores[i] < a.sgcv_scores[best]) best = i;
  }
  CHECK(a.selected_index == best);
  CHECK(a.sparsity[a.selected_index] < inst.data.n);
}

TEST_CASE("criterion names round-trip") {
  CHECK(to_string(Criterion::cv) == "cv");
  CHECK(to_string(Criterion::sgcv) == "sgcv");
  CHECK(criterion_from_string("cv") == Criterion::cv);
  CHECK(criterion_from_string("sgcv") == Criterion::sgcv);
  CHECK_THROWS_AS(criterion_from_string("aic"), ValidationError);
}
