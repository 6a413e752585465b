#ifndef COXFOLD_SELECTION_HPP
#define COXFOLD_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "likelihood.hpp"
#include "optimizer.hpp"
#include "rng.hpp"
#include "survival_data.hpp"
#include "types.hpp"

namespace coxfold {

// ==================== cross-validated penalty selection ====================
//
// Two K-fold criteria over a descending penalty grid.  Classically both are
// goodness scores (larger is better); both are negated here so the selector
// is a single argmin — one minimize-the-score contract:
//
//   cv    the negated held-out-likelihood sum
//             sum_k [ l_in_k(b_k) - l(b_k) ]
//         where b_k is the fit excluding fold k, l the full-sample log
//         partial likelihood and l_in_k the one excluding fold k (their
//         difference is fold k's held-out contribution, which the partial
//         likelihood does not decompose additively — hence this form);
//   sgcv  the same construction with each log likelihood first normalized
//         by its sample size deflated for the fold's model size s_k:
//             sum_k [ l_in_k(b_k) / (n_k (1 - s_k/n_k)^2)
//                     - l(b_k) / (n (1 - s_k/n)^2) ].
//
// sgcv refuses to score meaningless fold estimates: a fold whose model size
// reaches its held-in sample size (the deflated normalizer vanishes or
// flips sign), or whose fit exhausted its sweep budget without converging
// (the no-finite-maximizer regime at small penalty levels, where
// coefficients run away), poisons that whole level with +infinity so the
// argmin can never land on it.  cv is left untouched: its value is finite
// and well defined whatever the fold fit did, and its own held-out term
// already blows up in that regime, steering the argmin away on its own.
//
// The selected level minimizes the criterion over levels whose median fold
// model size stays below n; ties break toward the larger (sparser) level.

enum class Criterion { cv, sgcv };

inline std::string to_string(Criterion c) {
  return c == Criterion::cv ? "cv" : "sgcv";
}

inline Criterion criterion_from_string(const std::string& name) {
  if (name == "cv") return Criterion::cv;
  if (name == "sgcv") return Criterion::sgcv;
  throw ValidationError("unknown criterion '" + name +
                        "' (expected cv or sgcv)");
}

/** Subject-to-fold assignment, reproducible from its seed. */
struct FoldPlan {
  int num_folds = 0;
  std::vector<int> assignment;  // fold index per subject, original order
  seed_t seed = 0;
  bool stratified = true;
};

/**
 * Deal subjects into L folds.  Stratified (the default) shuffles events and
 * censored subjects separately and deals each round-robin, so every fold's
 * event count — hence censoring rate — is within one subject of perfect
 * balance.  Identical (data, L, seed, stratified) always produces the
 * identical plan.
 */
template <class T>
FoldPlan make_folds(const Dataset<T>& data, int num_folds, seed_t seed,
                    bool stratified = true) {
  if (num_folds < 2 || static_cast<Eigen::Index>(num_folds) > data.n) {
    throw ValidationError("fold count must lie in [2, n]");
  }
  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.stratified = stratified;
  plan.assignment.assign(static_cast<std::size_t>(data.n), 0);

  Rng rng(seed);
  if (stratified) {
    std::vector<Eigen::Index> events, censored;
    for (Eigen::Index i = 0; i < data.n; ++i) {
      (data.status[i] == 1 ? events : censored).push_back(i);
    }
    rng.shuffle(events);
    rng.shuffle(censored);
    std::size_t deal = 0;
    for (const Eigen::Index i : events) {
      plan.assignment[static_cast<std::size_t>(i)] =
          static_cast<int>(deal++ % static_cast<std::size_t>(num_folds));
    }
    for (const Eigen::Index i : censored) {
      plan.assignment[static_cast<std::size_t>(i)] =
          static_cast<int>(deal++ % static_cast<std::size_t>(num_folds));
    }
  } else {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(data.n));
    for (Eigen::Index i = 0; i < data.n; ++i) {
      all[static_cast<std::size_t>(i)] = i;
    }
    rng.shuffle(all);
    std::size_t deal = 0;
    for (const Eigen::Index i : all) {
      plan.assignment[static_cast<std::size_t>(i)] =
          static_cast<int>(deal++ % static_cast<std::size_t>(num_folds));
    }
  }
  return plan;
}

/**
 * One fold's sgcv contribution, from the fold fit's log partial likelihoods
 * (l_full on all data, l_in excluding the fold): the size-deflated, negated
 * held-out difference
 *     l_in / (n_in (1 - s/n_in)^2)  -  l_full / (n (1 - s/n)^2),
 * smaller is better.  Returns +infinity — excluding the level from any
 * argmin — when the fold estimate is not worth scoring: the model size has
 * reached the held-in sample size (the deflated normalizer would vanish or
 * flip sign), or the fit ran out of sweeps without converging (runaway
 * coefficients at small penalty levels).
 */
template <class T>
T sgcv_fold_term(T l_full, T l_in, Eigen::Index n, Eigen::Index n_in,
                 Eigen::Index s_hat, bool converged = true) {
  if (s_hat >= n_in || !converged) {
    return std::numeric_limits<T>::infinity();
  }
  const T nn = static_cast<T>(n);
  const T nk = static_cast<T>(n_in);
  const T ds = static_cast<T>(s_hat);
  const T full_norm = nn * (T(1) - ds / nn) * (T(1) - ds / nn);
  const T in_norm = nk * (T(1) - ds / nk) * (T(1) - ds / nk);
  return l_in / in_norm - l_full / full_norm;
}

/** Grid-wide scores produced by the fold engine. */
template <class T>
struct SelectionResult {
  T lambda_hat = T(0);
  Eigen::Index selected_index = -1;
  vec_t<T> lambdas;      // the (descending) grid evaluated
  vec_t<T> cv_scores;    // per level
  vec_t<T> sgcv_scores;  // per level
  ivec_t sparsity;       // median fold model size per level
  Criterion criterion = Criterion::sgcv;
};

namespace detail {

/**
 * The fold engine: fit every fold along the whole grid (warm starts within a
 * fold), and reduce to per-level cv/sgcv scores and median fold sparsity.
 */
template <class T>
SelectionResult<T> evaluate_folds(const Dataset<T>& data, const FoldPlan& plan,
                                  const vec_t<T>& lambdas,
                                  const FitConfig<T>& cfg,
                                  AscentAudit<T>* audit) {
  if (static_cast<Eigen::Index>(plan.assignment.size()) != data.n) {
    throw ValidationError("fold plan does not match the dataset");
  }
  if (lambdas.size() == 0) {
    throw ValidationError("empty penalty grid");
  }
  for (Eigen::Index i = 1; i < lambdas.size(); ++i) {
    if (!(lambdas[i] < lambdas[i - 1])) {
      throw ValidationError("penalty grid must be strictly descending");
    }
  }

  const int L = plan.num_folds;
  const Eigen::Index g = lambdas.size();

  SelectionResult<T> out;
  out.lambdas = lambdas;
  out.cv_scores = vec_t<T>::Zero(g);
  out.sgcv_scores = vec_t<T>::Zero(g);
  out.sparsity.resize(g);

  mat_t<T> fold_sparsity(L, g);  // s_k per (fold, level), stored as T

  for (int k = 0; k < L; ++k) {
    index_list_t held_in;
    for (Eigen::Index i = 0; i < data.n; ++i) {
      if (plan.assignment[static_cast<std::size_t>(i)] != k) {
        held_in.push_back(i);
      }
    }
    const Dataset<T> sub = subset_rows(data, held_in);
    if (sub.n_events == 0) {
      throw ValidationError("fold " + std::to_string(k) +
                            ": held-in data has zero events");
    }

    FitConfig<T> point_cfg = cfg;
    for (Eigen::Index i = 0; i < g; ++i) {
      point_cfg.penalty = cfg.penalty.with_lambda(lambdas[i]);
      const FitResult<T> fit = fit_ica(sub, point_cfg);
      if (audit != nullptr) audit->absorb(fit);
      point_cfg.init = fit.beta;

      const T l_full = log_partial_likelihood(data, fit.beta);
      const T l_in = log_partial_likelihood(sub, fit.beta);
      const auto s_hat = static_cast<Eigen::Index>(fit.active_set.size());

      out.cv_scores[i] += l_in - l_full;  // negated held-out contribution
      out.sgcv_scores[i] +=
          sgcv_fold_term<T>(l_full, l_in, data.n, sub.n, s_hat, fit.converged);
      fold_sparsity(k, i) = static_cast<T>(s_hat);
    }
  }

  // Median fold sparsity per level (lower median for even fold counts).
  std::vector<T> col(static_cast<std::size_t>(L));
  for (Eigen::Index i = 0; i < g; ++i) {
    for (int k = 0; k < L; ++k) {
      col[static_cast<std::size_t>(k)] = fold_sparsity(k, i);
    }
    std::sort(col.begin(), col.end());
    out.sparsity[i] =
        static_cast<Eigen::Index>(col[static_cast<std::size_t>((L - 1) / 2)]);
  }
  return out;
}

}  // namespace detail

/** cv score of a single penalty level (smaller is better). */
template <class T>
T cv_score(const Dataset<T>& data, const FoldPlan& plan, T lambda,
           const FitConfig<T>& cfg, AscentAudit<T>* audit = nullptr) {
  vec_t<T> grid(1);
  grid[0] = lambda;
  return detail::evaluate_folds(data, plan, grid, cfg, audit).cv_scores[0];
}

/** sgcv score of a single penalty level (smaller is better). */
template <class T>
T sgcv_score(const Dataset<T>& data, const FoldPlan& plan, T lambda,
             const FitConfig<T>& cfg, AscentAudit<T>* audit = nullptr) {
  vec_t<T> grid(1);
  grid[0] = lambda;
  return detail::evaluate_folds(data, plan, grid, cfg, audit).sgcv_scores[0];
}

/**
 * Evaluate the whole grid and pick the level minimizing the requested
 * criterion among levels whose median fold model size stays below n.
 * Descending grid + strict comparison means ties resolve to the larger
 * (sparser) level.  An empty eligible set is an error suggesting a grid
 * that reaches larger penalty levels.
 */
template <class T>
SelectionResult<T> select_lambda(const Dataset<T>& data, const FoldPlan& plan,
                                 const vec_t<T>& lambdas, Criterion criterion,
                                 const FitConfig<T>& cfg,
                                 AscentAudit<T>* audit = nullptr) {
  SelectionResult<T> out =
      detail::evaluate_folds(data, plan, lambdas, cfg, audit);
  out.criterion = criterion;

  const vec_t<T>& scores =
      criterion == Criterion::cv ? out.cv_scores : out.sgcv_scores;
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (out.sparsity[i] >= data.n) continue;
    if (best < 0 || scores[i] < scores[best]) best = i;
  }
  if (best < 0) {
    throw ValidationError(
        "every grid level saturates (median fold model size >= n); extend "
        "the grid toward larger penalty levels");
  }
  out.selected_index = best;
  out.lambda_hat = lambdas[best];
  return out;
}

}  // namespace coxfold

#endif  // COXFOLD_SELECTION_HPP
