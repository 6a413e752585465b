#ifndef COXFOLD_OPTIMIZER_HPP
#define COXFOLD_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "likelihood.hpp"
#include "penalties.hpp"
#include "survival_data.hpp"
#include "types.hpp"

namespace coxfold {

// ===================== penalized coordinate ascent =====================
//
// The solver maximizes   Q(beta) - n * sum_j p(|beta_j|)   by cyclic
// coordinate ascent on a partial quadratic approximation: at each visit the
// coordinate's exact gradient g and curvature h of Q are recomputed at the
// current iterate, the one-dimensional penalized quadratic is maximized in
// closed form, and the move is accepted only if it strictly increases the
// true penalized objective (with step halving as a safeguard).  Coordinates
// enter the update cycle through a screening rule: inactive coordinate j is
// admitted only when its current score component exceeds n * p'(0+), the
// exact threshold below which zero is already optimal for that coordinate.

/** Knobs for a single fit. */
template <class T>
struct FitConfig {
  Penalty<T> penalty;
  T tol = T(1e-8);             // stop when a full sweep gains at most this
  int max_sweeps = 1000;
  int inner_newton_steps = 1;  // quadratic reapproximations per visit
  vec_t<T> init;               // empty means start from zero
  bool standardize = false;    // fit on unit-variance columns, report raw scale
};

/** Outcome of a single fit. */
template <class T>
struct FitResult {
  vec_t<T> beta;
  index_list_t active_set;      // exactly the nonzero coordinates, ascending
  T objective = T(0);           // penalized objective at beta
  int sweeps = 0;
  bool converged = false;
  // Initial value, then one entry per committed sweep.  The final sweep of a
  // converged fit is rolled back (its gain sits inside the tolerance), so it
  // contributes no entry and the last entry equals `objective`.
  std::vector<T> objective_trace;
  // Ascent bookkeeping: the smallest strictly positive gain among accepted
  // updates (+inf when nothing was accepted) and the number of acceptances.
  T min_accepted_increase = std::numeric_limits<T>::infinity();
  long accepted_updates = 0;
};

/**
 * Running audit over many fits: how many ran, how many failed to converge,
 * whether any objective trace ever decreased, and the smallest strictly
 * positive accepted gain seen anywhere.  Aggregation keyed by nothing but
 * counts, so it can absorb fits in any order (merge is commutative).
 */
template <class T>
struct AscentAudit {
  long fits = 0;
  long nonconverged = 0;
  long trace_violations = 0;
  T min_accepted_increase = std::numeric_limits<T>::infinity();

  void absorb(const FitResult<T>& fit) {
    ++fits;
    if (!fit.converged) ++nonconverged;
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
      if (fit.objective_trace[i] < fit.objective_trace[i - 1]) {
        ++trace_violations;
      }
    }
    min_accepted_increase =
        std::min(min_accepted_increase, fit.min_accepted_increase);
  }

  void merge(const AscentAudit& other) {
    fits += other.fits;
    nonconverged += other.nonconverged;
    trace_violations += other.trace_violations;
    min_accepted_increase =
        std::min(min_accepted_increase, other.min_accepted_increase);
  }
};

/** A descending grid of penalty levels with one warm-started fit per level. */
template <class T>
struct RegularizationPath {
  vec_t<T> lambdas;                 // strictly descending
  std::vector<FitResult<T>> fits;   // aligned with lambdas
  ivec_t sparsity;                  // active-set size per level
  std::vector<char> saturated;      // 1 where sparsity >= n (degenerate zone)
  bool warm_started = true;
};

/**
 * Exact gradient and curvature of Q in coordinate `col` at `beta`:
 * g = score component, h = n * (information diagonal) = per-event weighted
 * variance total, floored at 1e-12 so degenerate columns stay harmless.
 */
template <class T>
std::pair<T, T> partial_quadratic(const Dataset<T>& data, const vec_t<T>& beta,
                                  Eigen::Index col) {
  if (col < 0 || col >= data.p) {
    throw ValidationError("partial_quadratic: coordinate out of range");
  }
  LikelihoodWorkspace<T> ws;
  linear_predictor_sorted(data, beta, ws.eta_sorted);
  prepare_sweep(data, ws.eta_sorted, ws.sweep);
  auto [g, curv] = coord_score_curvature(data, ws.sweep, col);
  return {g, std::max(curv, T(1e-12))};
}

namespace detail {

/** Mean/scale standardization of the covariate columns (population variance).
 *  Constant columns keep scale 1 so the transform stays invertible. */
template <class T>
struct Standardization {
  Dataset<T> data;
  vec_t<T> scale;  // per-column standard deviation actually applied
};

template <class T>
Standardization<T> standardize_dataset(const Dataset<T>& data) {
  mat_t<T> x = data.X;
  vec_t<T> scale(data.p);
  for (Eigen::Index j = 0; j < data.p; ++j) {
    const T mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const T sd = std::sqrt(x.col(j).squaredNorm() / static_cast<T>(data.n));
    scale[j] = sd > T(0) ? sd : T(1);
    x.col(j) /= scale[j];
  }
  return {Dataset<T>(data.time, data.status, std::move(x), data.feature_names),
          std::move(scale)};
}

template <class T>
void validate_fit_config(const Dataset<T>& data, const FitConfig<T>& cfg) {
  if (!(cfg.tol > T(0))) {
    throw ValidationError("fit tolerance must be positive");
  }
  if (cfg.max_sweeps < 1) {
    throw ValidationError("max_sweeps must be at least 1");
  }
  if (cfg.inner_newton_steps < 1) {
    throw ValidationError("inner_newton_steps must be at least 1");
  }
  if (cfg.init.size() != 0) {
    if (cfg.init.size() != data.p) {
      throw ValidationError("init vector length != covariate count");
    }
    if (!cfg.init.array().isFinite().all()) {
      throw ValidationError("init vector has non-finite entries");
    }
  }
}

/** The coordinate-ascent engine; assumes data is already on the fit scale. */
template <class T>
FitResult<T> fit_ica_core(const Dataset<T>& data, const FitConfig<T>& cfg) {
  const Eigen::Index n = data.n;
  const Eigen::Index p = data.p;
  const T n_scale = static_cast<T>(n);
  const Penalty<T>& pen = cfg.penalty;

  FitResult<T> out;
  out.beta = cfg.init.size() ? cfg.init : vec_t<T>::Zero(p);

  vec_t<T> eta, eta_trial;
  RiskSweep<T> sw, sw_trial;
  linear_predictor_sorted(data, out.beta, eta);
  prepare_sweep(data, eta, sw);

  T pen_sum = T(0);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (out.beta[j] != T(0)) pen_sum += penalty_value(pen, std::abs(out.beta[j]));
  }
  T obj = log_partial_likelihood_prepared(data, eta, sw) - n_scale * pen_sum;
  out.objective_trace.push_back(obj);

  const T admit_threshold = n_scale * penalty_deriv(pen, T(0));
  vec_t<T> score_vec(p);
  index_list_t cand;
  cand.reserve(static_cast<std::size_t>(p));

  vec_t<T> beta_snap, eta_snap;
  RiskSweep<T> sw_snap;

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    out.sweeps = sweep;

    // Each sweep runs transactionally: when its total gain lands within the
    // stopping tolerance the iterate has settled, and the sweep's
    // sub-tolerance nudges are rolled back.  The converged output is then an
    // exact fixed point -- refitting from it accepts no further updates.
    const T obj_before = obj;
    const T pen_before = pen_sum;
    const long updates_before = out.accepted_updates;
    const T min_inc_before = out.min_accepted_increase;
    beta_snap = out.beta;
    eta_snap = eta;
    sw_snap = sw;

    // Refresh the candidate cycle: current active set plus every inactive
    // coordinate whose score (== its score with beta_j at 0) clears the
    // admission threshold.
    score_prepared(data, sw, score_vec);
    cand.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (out.beta[j] != T(0) || std::abs(score_vec[j]) > admit_threshold) {
        cand.push_back(j);
      }
    }

    for (const Eigen::Index j : cand) {
      for (int inner = 0; inner < cfg.inner_newton_steps; ++inner) {
        const auto gc = coord_score_curvature(data, sw, j);
        const T g = gc.first;
        const T h = std::max(gc.second, T(1e-12));
        const T proposal =
            solve_univariate(pen, g + h * out.beta[j], h, n);
        if (proposal == out.beta[j]) break;

        // Step halving: walk the proposal back toward the current value
        // until the true penalized objective strictly increases.
        const T old = out.beta[j];
        const T old_pen = penalty_value(pen, std::abs(old));
        bool accepted = false;
        T step = T(1);
        for (int halve = 0; halve <= 20; ++halve, step /= T(2)) {
          const T trial = old + step * (proposal - old);
          if (trial == old) break;
          eta_trial = eta + (trial - old) * data.X_sorted.col(j);
          prepare_sweep(data, eta_trial, sw_trial);
          const T pen_sum_trial =
              pen_sum - old_pen + penalty_value(pen, std::abs(trial));
          const T obj_trial =
              log_partial_likelihood_prepared(data, eta_trial, sw_trial) -
              n_scale * pen_sum_trial;
          if (obj_trial > obj) {
            out.min_accepted_increase =
                std::min(out.min_accepted_increase, obj_trial - obj);
            ++out.accepted_updates;
            out.beta[j] = trial;
            pen_sum = pen_sum_trial;
            obj = obj_trial;
            std::swap(eta, eta_trial);
            std::swap(sw, sw_trial);
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
      }
    }

    const T gain = obj - obj_before;
    if (std::abs(gain) <= cfg.tol) {
      out.beta.swap(beta_snap);
      eta.swap(eta_snap);
      std::swap(sw, sw_snap);
      pen_sum = pen_before;
      obj = obj_before;
      out.accepted_updates = updates_before;
      out.min_accepted_increase = min_inc_before;
      out.converged = true;
      break;
    }
    out.objective_trace.push_back(obj);
  }

  out.objective = obj;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (out.beta[j] != T(0)) out.active_set.push_back(j);
  }
  return out;
}

}  // namespace detail

/**
 * Penalized coordinate-ascent fit.  Returns converged=false (no exception)
 * when max_sweeps full sweeps finish without the objective settling.
 */
template <class T>
FitResult<T> fit_ica(const Dataset<T>& data, const FitConfig<T>& cfg) {
  detail::validate_fit_config(data, cfg);
  if (!cfg.standardize) {
    return detail::fit_ica_core(data, cfg);
  }
  const auto std_data = detail::standardize_dataset(data);
  FitConfig<T> scaled_cfg = cfg;
  scaled_cfg.standardize = false;
  if (cfg.init.size() != 0) {
    scaled_cfg.init = cfg.init.cwiseProduct(std_data.scale);
  }
  FitResult<T> fit = detail::fit_ica_core(std_data.data, scaled_cfg);
  // Report coefficients on the raw covariate scale; the penalty acted on the
  // standardized problem, whose objective/trace the result keeps.
  fit.beta = fit.beta.cwiseQuotient(std_data.scale);
  return fit;
}

/**
 * Default penalty-level grid: num log-spaced values descending from
 * lambda_max = ||score(0)||_inf / n down to ratio * lambda_max.  At
 * lambda_max the screening rule admits nothing for penalties with unit
 * rescaled slope at zero (lasso/scad/mcp), so the first fit is exactly null;
 * sica's slope at zero exceeds one, so the same anchor is reused there and
 * the null property continues to hold at every realistic anchor.
 */
template <class T>
vec_t<T> lambda_grid(const Dataset<T>& data, Eigen::Index num = 100,
                     T ratio = T(0.01)) {
  if (num < 1) throw ValidationError("lambda_grid: need at least one point");
  if (!(ratio > T(0)) || !(ratio < T(1))) {
    throw ValidationError("lambda_grid: ratio must lie in (0, 1)");
  }
  const vec_t<T> zero = vec_t<T>::Zero(data.p);
  const vec_t<T> s0 = score(data, zero);
  const T lambda_max = s0.template lpNorm<Eigen::Infinity>() /
                       static_cast<T>(data.n);
  if (!(lambda_max > T(0))) {
    throw ValidationError(
        "lambda_grid: score at zero is identically zero (no events or no "
        "informative covariate); supply an explicit grid");
  }
  vec_t<T> grid(num);
  if (num == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const T log_max = std::log(lambda_max);
  const T log_min = std::log(lambda_max * ratio);
  for (Eigen::Index i = 0; i < num; ++i) {
    const T frac = static_cast<T>(i) / static_cast<T>(num - 1);
    grid[i] = std::exp(log_max + frac * (log_min - log_max));
  }
  grid[0] = lambda_max;  // exact endpoints despite the log round trip
  grid[num - 1] = lambda_max * ratio;
  return grid;
}

/**
 * Warm-started fits over a strictly descending penalty grid.  cfg supplies
 * the penalty family (kind and shape) and solver knobs; its level is
 * replaced by each grid value, and each fit starts from the previous fit's
 * coefficients.  Per-level non-convergence is recorded in that level's
 * FitResult, never thrown.  Levels whose active set reaches n subjects are
 * flagged as saturated (a small-lambda artifact of coordinate ascent) but
 * kept in the path.
 */
template <class T>
RegularizationPath<T> fit_path(const Dataset<T>& data, const vec_t<T>& lambdas,
                               const FitConfig<T>& cfg) {
  if (lambdas.size() == 0) {
    throw ValidationError("fit_path: empty penalty grid");
  }
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > T(0))) {
      throw ValidationError("fit_path: penalty levels must be positive");
    }
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
      throw ValidationError("fit_path: grid must be strictly descending");
    }
  }
  RegularizationPath<T> path;
  path.lambdas = lambdas;
  path.fits.reserve(static_cast<std::size_t>(lambdas.size()));
  path.sparsity.resize(lambdas.size());
  path.saturated.assign(static_cast<std::size_t>(lambdas.size()), 0);

  FitConfig<T> point_cfg = cfg;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    point_cfg.penalty = cfg.penalty.with_lambda(lambdas[i]);
    FitResult<T> fit = fit_ica(data, point_cfg);
    point_cfg.init = fit.beta;  // warm start the next level
    path.sparsity[i] = static_cast<Eigen::Index>(fit.active_set.size());
    path.saturated[static_cast<std::size_t>(i)] =
        path.sparsity[i] >= data.n ? 1 : 0;
    path.fits.push_back(std::move(fit));
  }
  return path;
}

/**
 * Support-restricted fit: coefficients outside `support` are pinned at zero
 * and the penalized problem is solved on the remaining columns.  The result
 * is reported in full dimension.
 */
template <class T>
FitResult<T> fit_oracle(const Dataset<T>& data, const index_list_t& support,
                        const FitConfig<T>& cfg) {
  if (support.empty()) {
    throw ValidationError("fit_oracle: support must be nonempty");
  }
  index_list_t cols = support;
  std::sort(cols.begin(), cols.end());
  if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) {
    throw ValidationError("fit_oracle: duplicate support index");
  }
  const Dataset<T> sub = subset_columns(data, cols);

  FitConfig<T> sub_cfg = cfg;
  if (cfg.init.size() != 0) {
    sub_cfg.init.resize(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      sub_cfg.init[static_cast<Eigen::Index>(k)] = cfg.init[cols[k]];
    }
  }
  FitResult<T> sub_fit = fit_ica(sub, sub_cfg);

  FitResult<T> out;
  out.beta = vec_t<T>::Zero(data.p);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.beta[cols[k]] = sub_fit.beta[static_cast<Eigen::Index>(k)];
  }
  for (Eigen::Index j = 0; j < data.p; ++j) {
    if (out.beta[j] != T(0)) out.active_set.push_back(j);
  }
  out.objective = sub_fit.objective;
  out.sweeps = sub_fit.sweeps;
  out.converged = sub_fit.converged;
  out.objective_trace = std::move(sub_fit.objective_trace);
  out.min_accepted_increase = sub_fit.min_accepted_increase;
  out.accepted_updates = sub_fit.accepted_updates;
  return out;
}

}  // namespace coxfold

#endif  // COXFOLD_OPTIMIZER_HPP
