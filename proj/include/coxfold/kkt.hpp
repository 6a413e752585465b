#ifndef COXFOLD_KKT_HPP
#define COXFOLD_KKT_HPP

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "errors.hpp"
#include "likelihood.hpp"
#include "penalties.hpp"
#include "survival_data.hpp"
#include "types.hpp"

namespace coxfold {

// ======================= local-maximizer certificate =======================
//
// A candidate beta for the penalized problem  max Q(beta) - n sum p(|beta_j|)
// is certified by three checks, evaluated in nonstrict form with a tolerance
// (the strict versions characterize strict local maximizers but are never
// numerically verifiable):
//
//   stationarity  on the active set, the score must match the penalty
//                 gradient:  score_j = n * p'(|beta_j|) * sgn(beta_j);
//   inactivity    off the active set, every score component must stay below
//                 the admission threshold n * p'(0+);
//   curvature     the likelihood's curvature on the active block must beat
//                 the penalty's local concavity:
//                 lambda_min( sum_j d_j V(beta, t_j) |_active ) >= n*lambda*kappa.
//
// An empty active set has nothing to destabilize: the stationarity residual
// is zero and the curvature margin +infinity by convention.

/** Margins of the three conditions; positive margins are good. */
template <class T>
struct KKTReport {
  T stationarity_residual = T(0);  // sup-norm, want <= tol
  T inactive_margin = T(0);        // threshold minus worst score, want >= -tol
  T curvature_margin = T(0);       // eigenvalue minus concavity, want >= -tol
  bool passed = false;
  T tol = T(0);
};

/** Certify beta against the three local-maximizer conditions. */
template <class T>
KKTReport<T> check_local_max(const Dataset<T>& data, const vec_t<T>& beta,
                             const Penalty<T>& pen, T tol) {
  if (beta.size() != data.p) {
    throw ValidationError("check_local_max: beta length != covariate count");
  }
  if (!beta.array().isFinite().all()) {
    throw ValidationError("check_local_max: beta has non-finite entries");
  }
  if (!(tol > T(0))) {
    throw ValidationError("check_local_max: tolerance must be positive");
  }

  const T n_scale = static_cast<T>(data.n);
  const vec_t<T> s = score(data, beta);

  index_list_t active;
  for (Eigen::Index j = 0; j < data.p; ++j) {
    if (beta[j] != T(0)) active.push_back(j);
  }

  KKTReport<T> out;
  out.tol = tol;

  // Stationarity over the active set.
  T resid = T(0);
  for (const Eigen::Index j : active) {
    const T sgn = beta[j] > T(0) ? T(1) : T(-1);
    const T target = n_scale * penalty_deriv(pen, std::abs(beta[j])) * sgn;
    resid = std::max(resid, std::abs(s[j] - target));
  }
  out.stationarity_residual = resid;

  // Inactive scores against the admission threshold.
  const T threshold = n_scale * penalty_deriv(pen, T(0));
  T worst_inactive = T(0);
  bool any_inactive = false;
  for (Eigen::Index j = 0; j < data.p; ++j) {
    if (beta[j] == T(0)) {
      any_inactive = true;
      worst_inactive = std::max(worst_inactive, std::abs(s[j]));
    }
  }
  out.inactive_margin = any_inactive
                            ? threshold - worst_inactive
                            : std::numeric_limits<T>::infinity();

  // Curvature on the active block.
  if (active.empty()) {
    out.curvature_margin = std::numeric_limits<T>::infinity();
  } else {
    const mat_t<T> block = n_scale * information(data, beta, active);
    Eigen::SelfAdjointEigenSolver<mat_t<T>> eig(block,
                                                Eigen::EigenvaluesOnly);
    const T lambda_min = eig.eigenvalues().minCoeff();
    vec_t<T> v(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      v[static_cast<Eigen::Index>(k)] = beta[active[k]];
    }
    const T kappa = local_concavity(pen, v).kappa;
    out.curvature_margin = lambda_min - n_scale * pen.lambda * kappa;
  }

  out.passed = out.stationarity_residual <= tol &&
               out.inactive_margin >= -tol && out.curvature_margin >= -tol;
  return out;
}

/** Certify with the default tolerance 1e-6 * n. */
template <class T>
KKTReport<T> check_local_max(const Dataset<T>& data, const vec_t<T>& beta,
                             const Penalty<T>& pen) {
  return check_local_max(data, beta, pen,
                         T(1e-6) * static_cast<T>(data.n));
}

}  // namespace coxfold

#endif  // COXFOLD_KKT_HPP
