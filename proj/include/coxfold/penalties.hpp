#ifndef COXFOLD_PENALTIES_HPP
#define COXFOLD_PENALTIES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace coxfold {

// ========================= folded-concave penalties =========================
//
// A penalty here is a function p(t) on t >= 0 with p(0) = 0 whose rescaling
// p(t)/lambda is nondecreasing and concave with a positive right derivative
// at zero.  Four kinds are provided:
//
//   lasso  p(t) = lambda * t
//   scad   p'(t) = lambda * { 1(t <= lambda)
//                             + (a*lambda - t)_+ / ((a-1)*lambda) * 1(t > lambda) },
//          a > 2 (default 3.7); integrated into a three-piece closed form
//   mcp    p(t) = lambda*t - t^2/(2a) for t <= a*lambda, else a*lambda^2/2,
//          a >= 1 (default 3)
//   sica   p(t) = (lambda + 1) * t / (lambda + t)
//
// lasso sits at the convex boundary of the family (zero local concavity).

enum class PenaltyKind { lasso, scad, mcp, sica };

inline std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::lasso: return "lasso";
    case PenaltyKind::scad: return "scad";
    case PenaltyKind::mcp: return "mcp";
    case PenaltyKind::sica: return "sica";
  }
  return "?";
}

inline PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "lasso") return PenaltyKind::lasso;
  if (name == "scad") return PenaltyKind::scad;
  if (name == "mcp") return PenaltyKind::mcp;
  if (name == "sica") return PenaltyKind::sica;
  throw ValidationError("unknown penalty kind '" + name +
                        "' (expected lasso, scad, mcp, or sica)");
}

/** Default shape parameter for kinds that have one. */
template <class T>
constexpr T default_shape(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::scad: return T(3.7);
    case PenaltyKind::mcp: return T(3);
    default: return T(0);
  }
}

/**
 * Immutable penalty value type.  Shape-parameter validity is checked at
 * construction, never at call time: scad requires a > 2, mcp requires a >= 1.
 */
template <class T>
struct Penalty {
  PenaltyKind kind = PenaltyKind::lasso;
  T lambda = T(1);
  T a = T(0);  // shape parameter; ignored by lasso and sica

  Penalty() = default;

  Penalty(PenaltyKind kind_in, T lambda_in,
          T a_in = std::numeric_limits<T>::quiet_NaN())
      : kind(kind_in), lambda(lambda_in), a(a_in) {
    if (!(lambda > T(0)) || !std::isfinite(static_cast<double>(lambda))) {
      throw ValidationError("penalty level lambda must be positive and finite");
    }
    if (std::isnan(static_cast<double>(a))) a = default_shape<T>(kind);
    if (kind == PenaltyKind::scad && !(a > T(2))) {
      throw ValidationError("scad shape parameter must satisfy a > 2");
    }
    if (kind == PenaltyKind::mcp && !(a >= T(1))) {
      throw ValidationError("mcp shape parameter must satisfy a >= 1");
    }
  }

  /** Same kind and shape at a different level. */
  Penalty with_lambda(T new_lambda) const {
    return Penalty(kind, new_lambda, a);
  }
};

/**
 * A penalty family before a level is chosen: kind plus shape.  Used wherever
 * the level is data-driven (grids, cross-validation, simulation configs).
 */
template <class T>
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::scad;
  T a = std::numeric_limits<T>::quiet_NaN();  // NaN -> family default shape

  PenaltySpec() = default;
  explicit PenaltySpec(PenaltyKind kind_in,
                       T a_in = std::numeric_limits<T>::quiet_NaN())
      : kind(kind_in), a(a_in) {}

  /** Bind a level (validates kind/shape/level together). */
  Penalty<T> at(T lambda) const { return Penalty<T>(kind, lambda, a); }
};

/** p(t) for t >= 0. */
template <class T>
T penalty_value(const Penalty<T>& pen, T t) {
  const T lam = pen.lambda;
  const T a = pen.a;
  switch (pen.kind) {
    case PenaltyKind::lasso:
      return lam * t;
    case PenaltyKind::scad:
      if (t <= lam) return lam * t;
      if (t <= a * lam) {
        return (T(2) * a * lam * t - t * t - lam * lam) / (T(2) * (a - T(1)));
      }
      return lam * lam * (a + T(1)) / T(2);
    case PenaltyKind::mcp:
      if (t <= a * lam) return lam * t - t * t / (T(2) * a);
      return a * lam * lam / T(2);
    case PenaltyKind::sica:
      return (lam + T(1)) * t / (lam + t);
  }
  return T(0);
}

/** Right derivative p'(t) at t >= 0; nonincreasing in t for every kind. */
template <class T>
T penalty_deriv(const Penalty<T>& pen, T t) {
  const T lam = pen.lambda;
  const T a = pen.a;
  switch (pen.kind) {
    case PenaltyKind::lasso:
      return lam;
    case PenaltyKind::scad:
      if (t <= lam) return lam;
      if (t < a * lam) return (a * lam - t) / (a - T(1));
      return T(0);
    case PenaltyKind::mcp:
      return std::max(lam - t / a, T(0));
    case PenaltyKind::sica: {
      const T d = lam + t;
      return (lam + T(1)) * lam / (d * d);
    }
  }
  return T(0);
}

/** Local concavity bound of the rescaled penalty near a coefficient vector. */
template <class T>
struct ConcavityBound {
  T kappa = T(0);
};

/**
 * kappa(pen, v): the largest negative curvature of p(t)/lambda attained in
 * arbitrarily small neighborhoods of the |v_j|.  Zero for lasso; for scad it
 * is 1/((a-1)*lambda) when some |v_j| lies in [lambda, a*lambda] and zero
 * otherwise; for mcp it is 1/(a*lambda) when some |v_j| <= a*lambda; for sica
 * the curvature 2*(lambda+1)/(lambda+t)^3 (of the rescaled penalty) decreases
 * in t, so the bound is attained at min_j |v_j|.
 *
 * v is an active-coefficient vector: it must be nonempty with no zero entry.
 */
template <class T>
ConcavityBound<T> local_concavity(const Penalty<T>& pen, const vec_t<T>& v) {
  if (v.size() == 0) {
    throw ValidationError("local_concavity: empty coefficient vector");
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v[j] == T(0)) {
      throw ValidationError(
          "local_concavity: coefficient vector has a zero entry");
    }
  }
  const T lam = pen.lambda;
  const T a = pen.a;
  const vec_t<T> mag = v.cwiseAbs();
  switch (pen.kind) {
    case PenaltyKind::lasso:
      return {T(0)};
    case PenaltyKind::scad: {
      const bool hit = ((mag.array() >= lam) && (mag.array() <= a * lam)).any();
      return {hit ? T(1) / ((a - T(1)) * lam) : T(0)};
    }
    case PenaltyKind::mcp: {
      const bool hit = (mag.array() <= a * lam).any();
      return {hit ? T(1) / (a * lam) : T(0)};
    }
    case PenaltyKind::sica: {
      const T tmin = mag.minCoeff();
      const T d = lam + tmin;
      // curvature of p/lambda: p''(t)/lambda with p'' = -2*lam*(lam+1)/(lam+t)^3
      return {T(2) * (lam + T(1)) / (d * d * d)};
    }
  }
  return {T(0)};
}

namespace detail {

/** Penalized-quadratic objective g*u - h*u^2/2 - n*p(|u|), for u >= 0. */
template <class T>
T univariate_objective(const Penalty<T>& pen, T g, T h, T n_scale, T u) {
  return g * u - h * u * u / T(2) - n_scale * penalty_value(pen, u);
}

}  // namespace detail

/**
 * Global maximizer of  u  ->  g*u - (h/2)*u^2 - n*p(|u|).
 *
 * The objective is symmetric in (g, u) -> (-g, -u), so the search runs on
 * u >= 0 with |g| and the sign is restored at the end.  For lasso this is
 * soft thresholding in closed form.  For scad/mcp the candidate set is the
 * per-piece stationary points (kept only when the piece is locally concave
 * and the point falls inside it) plus the piece boundaries and zero; the
 * best candidate is exact because the objective is piecewise quadratic.  For
 * sica the derivative g - h*u - n*p'(u) is strictly unimodal on u >= 0, so
 * its relevant (down-crossing) root is bracketed and bisected; candidates
 * are that root and zero.  Equal objectives break toward the smaller |u|.
 */
template <class T>
T solve_univariate(const Penalty<T>& pen, T g, T h, Eigen::Index n) {
  if (!std::isfinite(static_cast<double>(g)) ||
      !std::isfinite(static_cast<double>(h))) {
    throw NumericError("solve_univariate: non-finite input");
  }
  if (!(h > T(0))) {
    throw ValidationError("solve_univariate: curvature h must be positive");
  }
  if (g == T(0)) return T(0);
  const T sign = g > T(0) ? T(1) : T(-1);
  const T A = std::abs(g);
  const T N = static_cast<T>(n);
  const T lam = pen.lambda;
  const T a = pen.a;

  if (pen.kind == PenaltyKind::lasso) {
    const T shrunk = A - N * lam;
    return shrunk > T(0) ? sign * shrunk / h : T(0);
  }

  std::vector<T> cand;
  cand.push_back(T(0));
  switch (pen.kind) {
    case PenaltyKind::scad: {
      // piece 1: linear penalty on [0, lam]
      const T u1 = (A - N * lam) / h;
      if (u1 > T(0) && u1 <= lam) cand.push_back(u1);
      // piece 2: quadratic transition on [lam, a*lam]
      const T denom = h * (a - T(1)) - N;
      if (denom > T(0)) {
        const T u2 = (A * (a - T(1)) - N * a * lam) / denom;
        if (u2 >= lam && u2 <= a * lam) cand.push_back(u2);
      }
      // piece 3: flat penalty beyond a*lam
      const T u3 = A / h;
      if (u3 >= a * lam) cand.push_back(u3);
      cand.push_back(lam);
      cand.push_back(a * lam);
      break;
    }
    case PenaltyKind::mcp: {
      const T denom = h - N / a;
      if (denom > T(0)) {
        const T u1 = (A - N * lam) / denom;
        if (u1 > T(0) && u1 <= a * lam) cand.push_back(u1);
      }
      const T u2 = A / h;
      if (u2 >= a * lam) cand.push_back(u2);
      cand.push_back(a * lam);
      break;
    }
    case PenaltyKind::sica: {
      // f'(u) = A - h*u - N*(lam+1)*lam/(lam+u)^2 rises until
      // u_c = cbrt(2*N*lam*(lam+1)/h) - lam and falls afterwards.
      const auto fprime = [&](T u) {
        const T d = lam + u;
        return A - h * u - N * (lam + T(1)) * lam / (d * d);
      };
      const T uc = std::cbrt(T(2) * N * lam * (lam + T(1)) / h) - lam;
      T lo = std::max(uc, T(0));
      if (fprime(lo) > T(0)) {
        T hi = A / h;  // f'(A/h) = -N*p'(A/h) < 0, and A/h > lo here
        for (int it = 0; it < 120 && hi - lo > T(0); ++it) {
          const T mid = (lo + hi) / T(2);
          if (fprime(mid) > T(0)) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        cand.push_back((lo + hi) / T(2));
      }
      break;
    }
    case PenaltyKind::lasso:
      break;  // handled above
  }

  std::sort(cand.begin(), cand.end());
  T best_u = T(0);
  T best_f = detail::univariate_objective(pen, A, h, N, T(0));
  for (const T u : cand) {
    const T f = detail::univariate_objective(pen, A, h, N, u);
    if (f > best_f) {
      best_f = f;
      best_u = u;
    }
  }
  return sign * best_u;
}

}  // namespace coxfold

#endif  // COXFOLD_PENALTIES_HPP
