#ifndef COXFOLD_LIKELIHOOD_HPP
#define COXFOLD_LIKELIHOOD_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"
#include "survival_data.hpp"
#include "types.hpp"

namespace coxfold {

// ==================== partial likelihood and derivatives ====================
//
// Everything here is built on one primitive: a single sweep over subjects
// sorted by descending observed time.  Risk sets are prefixes of that order,
// so risk-set sums of exp(eta) (and of covariate-weighted exp(eta)) are
// running accumulations with a snapshot taken at each distinct event time.
// Full evaluations cost O(n*p); per-coordinate curvature costs O(n).
//
// All accumulators are kept in max-shifted form.  The running maximum m_k of
// the linear predictor over the current prefix rescales the accumulator
// whenever it grows, which makes every downstream ratio scale-free and every
// logarithm exact up to the shift; without it risk-set sums overflow at
// linear predictors around 700.

/**
 * Per-(data, eta) sweep state shared by the likelihood kernels.
 *
 * For sorted subject k:   w[k] = exp(eta_k - m_k),  c[k] = exp(m_{k-1} - m_k)
 * (c[0] = 0 clears the empty accumulator; c[k] = 1 unless subject k raised
 * the running max).  A stabilized prefix accumulator then evolves as
 * a_k = a_{k-1} * c[k] + w[k] * (payload_k), and any two accumulators at the
 * same k share the scale exp(m_k), so their ratio is exact.
 *
 * Snapshots per distinct event time j:  denom0[j] is the order-0 accumulator
 * at prefix length |R_j| (scale m at that point), and log_denom[j] is the
 * true log of sum_{i in R_j} exp(eta_i).
 */
template <class T>
struct RiskSweep {
  vec_t<T> w;
  vec_t<T> c;
  vec_t<T> denom0;     // length D, in snapshot scale
  vec_t<T> log_denom;  // length D, exact log of the risk-set sum

  void resize(Eigen::Index n, Eigen::Index n_times) {
    w.resize(n);
    c.resize(n);
    denom0.resize(n_times);
    log_denom.resize(n_times);
  }
};

/** Scratch buffers for the beta-based convenience entry points. */
template <class T>
struct LikelihoodWorkspace {
  vec_t<T> eta_sorted;
  RiskSweep<T> sweep;
};

/** Linear predictor in sorted-subject order; skips zero coefficients. */
template <class T>
void linear_predictor_sorted(const Dataset<T>& data, const vec_t<T>& beta,
                             vec_t<T>& eta_sorted) {
  if (beta.size() != data.p) {
    throw ValidationError("coefficient vector length != covariate count");
  }
  eta_sorted.setZero(data.n);
  for (Eigen::Index j = 0; j < data.p; ++j) {
    if (beta[j] != T(0)) {
      eta_sorted += beta[j] * data.X_sorted.col(j);
    }
  }
}

/** Fill the sweep state for a given sorted linear predictor. */
template <class T>
void prepare_sweep(const Dataset<T>& data, const vec_t<T>& eta_sorted,
                   RiskSweep<T>& sw) {
  const Eigen::Index n = data.n;
  sw.resize(n, data.n_times);
  T m = -std::numeric_limits<T>::infinity();
  T acc = T(0);
  Eigen::Index je = data.n_times - 1;  // smallest risk set is reached first
  for (Eigen::Index k = 0; k < n; ++k) {
    const T e = eta_sorted[k];
    if (!std::isfinite(static_cast<double>(e))) {
      throw NumericError("non-finite linear predictor for subject " +
                         std::to_string(data.order[k]));
    }
    if (e > m) {
      sw.c[k] = (k == 0) ? T(0) : std::exp(m - e);
      m = e;
      sw.w[k] = T(1);
    } else {
      sw.c[k] = T(1);
      sw.w[k] = std::exp(e - m);
    }
    acc = acc * sw.c[k] + sw.w[k];
    while (je >= 0 && data.risk_len[je] == k + 1) {
      sw.denom0[je] = acc;
      sw.log_denom[je] = m + std::log(acc);
      --je;
    }
  }
}

// ------------------------- prepared kernels -------------------------

/**
 * Log partial likelihood at a prepared sweep:
 *   sum_i status_i * eta_i  -  sum_j d_j * log sum_{i in R_j} exp(eta_i).
 * (Constant-free form: no 1/n inside the logarithm; maximizers and all
 * derivatives are unaffected by that convention.)
 */
template <class T>
T log_partial_likelihood_prepared(const Dataset<T>& data,
                                  const vec_t<T>& eta_sorted,
                                  const RiskSweep<T>& sw) {
  T value = eta_sorted.dot(data.status_weight_sorted);
  for (Eigen::Index j = 0; j < data.n_times; ++j) {
    value -= static_cast<T>(data.event_mult[j]) * sw.log_denom[j];
  }
  return value;
}

/**
 * Score (gradient of the log partial likelihood) at a prepared sweep:
 *   xi = sum over events of X  -  sum_j d_j * E(t_j),
 * with E the exp(eta)-weighted risk-set covariate mean.  One contiguous
 * column scan per covariate: O(n*p).
 */
template <class T>
void score_prepared(const Dataset<T>& data, const RiskSweep<T>& sw,
                    vec_t<T>& out) {
  out = data.event_x_total;
  for (Eigen::Index col = 0; col < data.p; ++col) {
    const T* x = data.X_sorted.col(col).data();
    T a1 = T(0);
    Eigen::Index je = data.n_times - 1;
    for (Eigen::Index k = 0; k < data.n; ++k) {
      a1 = a1 * sw.c[k] + sw.w[k] * x[k];
      while (je >= 0 && data.risk_len[je] == k + 1) {
        out[col] -= static_cast<T>(data.event_mult[je]) * a1 / sw.denom0[je];
        --je;
      }
    }
  }
}

/**
 * Directional pieces for one coordinate at a prepared sweep:
 *   g = score component,  curv = sum_j d_j * Var_j(x_col) >= 0
 * where Var_j is the weighted variance of the covariate over risk set j.
 * O(n), contiguous.
 */
template <class T>
std::pair<T, T> coord_score_curvature(const Dataset<T>& data,
                                      const RiskSweep<T>& sw,
                                      Eigen::Index col) {
  const T* x = data.X_sorted.col(col).data();
  T g = data.event_x_total[col];
  T curv = T(0);
  T a1 = T(0), a2 = T(0);
  Eigen::Index je = data.n_times - 1;
  for (Eigen::Index k = 0; k < data.n; ++k) {
    const T wx = sw.w[k] * x[k];
    a1 = a1 * sw.c[k] + wx;
    a2 = a2 * sw.c[k] + wx * x[k];
    while (je >= 0 && data.risk_len[je] == k + 1) {
      const T dj = static_cast<T>(data.event_mult[je]);
      const T mean = a1 / sw.denom0[je];
      g -= dj * mean;
      curv += dj * (a2 / sw.denom0[je] - mean * mean);
      --je;
    }
  }
  return {g, curv};
}

// ------------------------- public entry points -------------------------

/** Q(beta): log partial likelihood (see the prepared kernel for the form). */
template <class T>
T log_partial_likelihood(const Dataset<T>& data, const vec_t<T>& beta) {
  LikelihoodWorkspace<T> ws;
  linear_predictor_sorted(data, beta, ws.eta_sorted);
  prepare_sweep(data, ws.eta_sorted, ws.sweep);
  return log_partial_likelihood_prepared(data, ws.eta_sorted, ws.sweep);
}

/** Gradient of log_partial_likelihood. */
template <class T>
vec_t<T> score(const Dataset<T>& data, const vec_t<T>& beta) {
  LikelihoodWorkspace<T> ws;
  linear_predictor_sorted(data, beta, ws.eta_sorted);
  prepare_sweep(data, ws.eta_sorted, ws.sweep);
  vec_t<T> out;
  score_prepared(data, ws.sweep, out);
  return out;
}

namespace detail {
template <class T>
void check_block(const Dataset<T>& data, const index_list_t& block) {
  if (block.empty()) {
    throw ValidationError("coordinate block must be nonempty");
  }
  for (const Eigen::Index j : block) {
    if (j < 0 || j >= data.p) {
      throw ValidationError("coordinate block index out of range");
    }
  }
}
}  // namespace detail

/**
 * Weighted covariance of the covariates in `block` over risk set
 * `event_index` (0-based over the distinct ascending event times), with
 * weights proportional to exp(eta_i).  Computed in centered form, so the
 * result is positive semidefinite up to roundoff.
 */
template <class T>
mat_t<T> v_matrix(const Dataset<T>& data, const vec_t<T>& beta,
                  Eigen::Index event_index, const index_list_t& block) {
  detail::check_block(data, block);
  if (event_index < 0 || event_index >= data.n_times) {
    throw ValidationError("event index out of range (no such event time)");
  }
  const Eigen::Index L = data.risk_len[event_index];
  const Eigen::Index q = static_cast<Eigen::Index>(block.size());

  vec_t<T> eta_sorted;
  linear_predictor_sorted(data, beta, eta_sorted);
  vec_t<T> wgt = eta_sorted.head(L);
  const T m = wgt.maxCoeff();
  wgt = (wgt.array() - m).exp();
  wgt /= wgt.sum();

  mat_t<T> xb(L, q);
  for (Eigen::Index c = 0; c < q; ++c) {
    xb.col(c) = data.X_sorted.col(block[static_cast<std::size_t>(c)]).head(L);
  }
  const vec_t<T> mean = xb.transpose() * wgt;
  xb.rowwise() -= mean.transpose();
  return xb.transpose() * (wgt.asDiagonal() * xb);
}

/**
 * Empirical information restricted to `block`:
 *   (1/n) * sum_j d_j * V(beta, t_j)  =  -(1/n) * Hessian of Q on the block.
 * Single sweep; O(n * |block|^2).
 */
template <class T>
mat_t<T> information(const Dataset<T>& data, const vec_t<T>& beta,
                     const index_list_t& block) {
  detail::check_block(data, block);
  const Eigen::Index q = static_cast<Eigen::Index>(block.size());
  const Eigen::Index D = data.n_times;

  LikelihoodWorkspace<T> ws;
  linear_predictor_sorted(data, beta, ws.eta_sorted);
  prepare_sweep(data, ws.eta_sorted, ws.sweep);
  const RiskSweep<T>& sw = ws.sweep;

  // Pass 1: per-event weighted means of each block column (D x q).
  mat_t<T> emat(D, q);
  for (Eigen::Index c = 0; c < q; ++c) {
    const T* x = data.X_sorted.col(block[static_cast<std::size_t>(c)]).data();
    T a1 = T(0);
    Eigen::Index je = D - 1;
    for (Eigen::Index k = 0; k < data.n; ++k) {
      a1 = a1 * sw.c[k] + sw.w[k] * x[k];
      while (je >= 0 && data.risk_len[je] == k + 1) {
        emat(je, c) = a1 / sw.denom0[je];
        --je;
      }
    }
  }

  // Pass 2: second-moment accumulation per column pair.
  mat_t<T> m2 = mat_t<T>::Zero(q, q);
  for (Eigen::Index c1 = 0; c1 < q; ++c1) {
    const T* xa = data.X_sorted.col(block[static_cast<std::size_t>(c1)]).data();
    for (Eigen::Index c2 = c1; c2 < q; ++c2) {
      const T* xb = data.X_sorted.col(block[static_cast<std::size_t>(c2)]).data();
      T a2 = T(0);
      Eigen::Index je = D - 1;
      T total = T(0);
      for (Eigen::Index k = 0; k < data.n; ++k) {
        a2 = a2 * sw.c[k] + sw.w[k] * xa[k] * xb[k];
        while (je >= 0 && data.risk_len[je] == k + 1) {
          total += static_cast<T>(data.event_mult[je]) * a2 / sw.denom0[je];
          --je;
        }
      }
      m2(c1, c2) = total;
      m2(c2, c1) = total;
    }
  }

  // Subtract the per-event mean outer products: V_j = M2_j - E_j E_j'.
  for (Eigen::Index j = 0; j < D; ++j) {
    const T dj = static_cast<T>(data.event_mult[j]);
    m2.noalias() -= dj * (emat.row(j).transpose() * emat.row(j));
  }
  return m2 / static_cast<T>(data.n);
}

/** Raw risk-set moments at one event time. */
template <class T>
struct MomentSet {
  T s0 = T(0);            // (1/n) sum_{R_j} exp(eta_i)
  vec_t<T> s1;            // (1/n) sum_{R_j} exp(eta_i) X_i        (order >= 1)
  mat_t<T> s2;            // (1/n) sum_{R_j} exp(eta_i) X_i X_i'   (order == 2)
  Eigen::Index at_event = 0;
  int order = 0;
};

/**
 * Moments of order 0..`order` over risk set `event_index` (0-based over the
 * distinct ascending event times).  Unlike the ratio-based kernels these are
 * raw (unshifted) values, so an extreme linear predictor can make them
 * unrepresentable; that raises NumericError naming the offending subject.
 */
template <class T>
MomentSet<T> moments(const Dataset<T>& data, const vec_t<T>& beta,
                     Eigen::Index event_index, int order) {
  if (event_index < 0 || event_index >= data.n_times) {
    throw ValidationError("event index out of range (no such event time)");
  }
  if (order < 0 || order > 2) {
    throw ValidationError("moment order must be 0, 1, or 2");
  }
  const Eigen::Index L = data.risk_len[event_index];

  vec_t<T> eta_sorted;
  linear_predictor_sorted(data, beta, eta_sorted);
  Eigen::Index arg_max = 0;
  const T m = eta_sorted.head(L).maxCoeff(&arg_max);
  const vec_t<T> u = (eta_sorted.head(L).array() - m).exp();
  const T scale = std::exp(m) / static_cast<T>(data.n);

  MomentSet<T> out;
  out.at_event = event_index;
  out.order = order;
  out.s0 = u.sum() * scale;
  bool finite = std::isfinite(static_cast<double>(out.s0));
  if (order >= 1 && finite) {
    out.s1 = (data.X_sorted.topRows(L).transpose() * u) * scale;
    finite = out.s1.array().isFinite().all();
  }
  if (order == 2 && finite) {
    out.s2 = (data.X_sorted.topRows(L).transpose() * u.asDiagonal() *
              data.X_sorted.topRows(L)) *
             scale;
    finite = out.s2.array().isFinite().all();
  }
  if (!finite) {
    throw NumericError("moment overflow at event index " +
                       std::to_string(event_index) +
                       ": linear predictor of subject " +
                       std::to_string(data.order[arg_max]) + " is " +
                       std::to_string(static_cast<double>(m)));
  }
  return out;
}

}  // namespace coxfold

#endif  // COXFOLD_LIKELIHOOD_HPP
