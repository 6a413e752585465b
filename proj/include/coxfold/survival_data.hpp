#ifndef COXFOLD_SURVIVAL_DATA_HPP
#define COXFOLD_SURVIVAL_DATA_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace coxfold {

// ========================= right-censored data =========================

/** One subject: observed time, event indicator, covariate row. */
template <class T>
struct SurvivalRecord {
  T time;              // observed time: min(event time, censoring time)
  int status;          // 1 = event observed, 0 = censored
  vec_t<T> covariates; // length p
};

/**
 * An immutable, indexed right-censored sample.
 *
 * Construction validates the records and builds every index structure the
 * likelihood code needs:
 *
 *  - `order` sorts subjects by descending observed time (ties by original
 *    index), so the risk set of any event time is a *prefix* of the sorted
 *    subjects.  All cumulative risk-set sums are single sweeps over that
 *    prefix order; nothing ever rescans per event.
 *  - Tied event times are grouped: `event_time` holds the D distinct event
 *    times ascending, `event_mult[j]` how many events share time j, and
 *    `risk_len[j]` the prefix length |R_j| = #{i : time_i >= event_time[j]}.
 *    Tied events share one risk set and each contributes its own likelihood
 *    term with the shared denominator; censored subjects tied with an event
 *    time stay in that risk set (the >= above).
 *  - `X_sorted` is the covariate matrix with rows permuted into `order`, so
 *    per-covariate sweeps walk a contiguous column.
 *
 * After construction a Dataset is never mutated; concurrent readers are safe.
 */
template <class T>
struct Dataset {
  // --- as ingested (original row order) ---
  vec_t<T> time;
  Eigen::Matrix<int, Eigen::Dynamic, 1> status;
  mat_t<T> X;
  std::vector<std::string> feature_names;  // empty entries allowed

  // --- sizes ---
  Eigen::Index n = 0;         // subjects
  Eigen::Index p = 0;         // covariates
  Eigen::Index n_events = 0;  // subjects with status 1
  Eigen::Index n_times = 0;   // distinct event times D

  // --- sorted view (descending time; risk sets are prefixes) ---
  ivec_t order;           // original index of the k-th sorted subject
  vec_t<T> time_sorted;
  vec_t<T> status_weight_sorted;  // status as T, aligned with `order`
  mat_t<T> X_sorted;

  // --- event index (ascending distinct event times) ---
  vec_t<T> event_time;   // length D, strictly ascending
  ivec_t event_mult;     // d_j >= 1
  ivec_t risk_len;       // |R_j|, strictly decreasing in j
  ivec_t event_subjects; // original indices of events, time asc, index asc
  vec_t<T> event_x_total; // sum of covariate rows over all events (length p)

  Dataset() = default;

  Dataset(vec_t<T> time_in, Eigen::Matrix<int, Eigen::Dynamic, 1> status_in,
          mat_t<T> x_in, std::vector<std::string> names = {})
      : time(std::move(time_in)),
        status(std::move(status_in)),
        X(std::move(x_in)),
        feature_names(std::move(names)) {
    n = time.size();
    p = X.cols();
    if (status.size() != n || X.rows() != n) {
      throw SchemaError("dataset arrays disagree on the number of subjects");
    }
    if (!feature_names.empty() &&
        static_cast<Eigen::Index>(feature_names.size()) != p) {
      throw SchemaError("feature_names length does not match covariate count");
    }
    validate_();
    build_index_();
  }

  /** Row-wise convenience constructor. */
  explicit Dataset(const std::vector<SurvivalRecord<T>>& records,
                   std::vector<std::string> names = {}) {
    const Eigen::Index nr = static_cast<Eigen::Index>(records.size());
    const Eigen::Index pr = nr == 0 ? 0 : records.front().covariates.size();
    vec_t<T> t(nr);
    Eigen::Matrix<int, Eigen::Dynamic, 1> s(nr);
    mat_t<T> x(nr, pr);
    for (Eigen::Index i = 0; i < nr; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      if (r.covariates.size() != pr) {
        throw SchemaError("record " + std::to_string(i) +
                          " has a different covariate count");
      }
      t[i] = r.time;
      s[i] = r.status;
      x.row(i) = r.covariates.transpose();
    }
    *this = Dataset(std::move(t), std::move(s), std::move(x), std::move(names));
  }

  /** View of subject i in original order. */
  SurvivalRecord<T> record(Eigen::Index i) const {
    return SurvivalRecord<T>{time[i], status[i], X.row(i).transpose()};
  }

  /** Original subject indices of risk set j (j indexes distinct event times). */
  index_list_t risk_set(Eigen::Index j) const {
    index_list_t out(static_cast<std::size_t>(risk_len[j]));
    for (Eigen::Index k = 0; k < risk_len[j]; ++k) {
      out[static_cast<std::size_t>(k)] = order[k];
    }
    return out;
  }

  /** Name of feature j ("x<j>" when the source had no header names). */
  std::string feature_name(Eigen::Index j) const {
    if (static_cast<Eigen::Index>(feature_names.size()) == p &&
        !feature_names[static_cast<std::size_t>(j)].empty()) {
      return feature_names[static_cast<std::size_t>(j)];
    }
    return "x" + std::to_string(j);
  }

 private:
  void validate_() const {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(static_cast<double>(time[i])) || time[i] < T(0)) {
        throw ValidationError("subject " + std::to_string(i) +
                              ": time must be finite and nonnegative");
      }
      if (status[i] != 0 && status[i] != 1) {
        throw ValidationError("subject " + std::to_string(i) +
                              ": status must be 0 or 1, got " +
                              std::to_string(status[i]));
      }
    }
    if (!X.array().isFinite().all()) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!X.row(i).array().isFinite().all()) {
          throw ValidationError("subject " + std::to_string(i) +
                                ": covariates contain a non-finite value");
        }
      }
    }
  }

  void build_index_() {
    // Sort subjects by descending time; stable ties by original index.
    order.resize(n);
    std::iota(order.data(), order.data() + n, Eigen::Index{0});
    std::sort(order.data(), order.data() + n,
              [&](Eigen::Index a, Eigen::Index b) {
                if (time[a] != time[b]) return time[a] > time[b];
                return a < b;
              });
    time_sorted.resize(n);
    status_weight_sorted.resize(n);
    X_sorted.resize(n, p);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i = order[k];
      time_sorted[k] = time[i];
      status_weight_sorted[k] = static_cast<T>(status[i]);
      X_sorted.row(k) = X.row(i);
    }

    // Events in ascending time order (ties by original index).
    std::vector<Eigen::Index> ev;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (status[i] == 1) ev.push_back(i);
    }
    std::sort(ev.begin(), ev.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (time[a] != time[b]) return time[a] < time[b];
      return a < b;
    });
    n_events = static_cast<Eigen::Index>(ev.size());
    event_subjects.resize(n_events);
    for (Eigen::Index j = 0; j < n_events; ++j) {
      event_subjects[j] = ev[static_cast<std::size_t>(j)];
    }

    // Group tied events into distinct times with multiplicities.
    std::vector<T> dt;
    std::vector<Eigen::Index> dm;
    for (Eigen::Index j = 0; j < n_events; ++j) {
      const T t = time[event_subjects[j]];
      if (dt.empty() || dt.back() != t) {
        dt.push_back(t);
        dm.push_back(1);
      } else {
        ++dm.back();
      }
    }
    n_times = static_cast<Eigen::Index>(dt.size());
    event_time.resize(n_times);
    event_mult.resize(n_times);
    risk_len.resize(n_times);
    for (Eigen::Index j = 0; j < n_times; ++j) {
      event_time[j] = dt[static_cast<std::size_t>(j)];
      event_mult[j] = dm[static_cast<std::size_t>(j)];
      // |R_j| = #{subjects with time >= t_j}: time_sorted is nonincreasing,
      // so that count is the length of its leading >= t_j run.
      const T* beg = time_sorted.data();
      const T* end = beg + n;
      const T* split = std::partition_point(
          beg, end, [&](const T& v) { return v >= event_time[j]; });
      risk_len[j] = static_cast<Eigen::Index>(split - beg);
    }

    // Covariate total over events: the constant part of the score.
    event_x_total = vec_t<T>::Zero(p);
    for (Eigen::Index j = 0; j < n_events; ++j) {
      event_x_total += X.row(event_subjects[j]).transpose();
    }
  }
};

/** New Dataset containing the given rows (original relative order kept). */
template <class T>
Dataset<T> subset_rows(const Dataset<T>& data, const index_list_t& rows) {
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  vec_t<T> t(m);
  Eigen::Matrix<int, Eigen::Dynamic, 1> s(m);
  mat_t<T> x(m, data.p);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    if (i < 0 || i >= data.n) {
      throw ValidationError("subset_rows: row index out of range");
    }
    t[k] = data.time[i];
    s[k] = data.status[i];
    x.row(k) = data.X.row(i);
  }
  return Dataset<T>(std::move(t), std::move(s), std::move(x),
                    data.feature_names);
}

/** New Dataset restricted to the given covariate columns. */
template <class T>
Dataset<T> subset_columns(const Dataset<T>& data, const index_list_t& cols) {
  const Eigen::Index q = static_cast<Eigen::Index>(cols.size());
  mat_t<T> x(data.n, q);
  std::vector<std::string> names;
  const bool have_names =
      static_cast<Eigen::Index>(data.feature_names.size()) == data.p;
  if (have_names) names.resize(static_cast<std::size_t>(q));
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::Index j = cols[static_cast<std::size_t>(k)];
    if (j < 0 || j >= data.p) {
      throw ValidationError("subset_columns: column index out of range");
    }
    x.col(k) = data.X.col(j);
    if (have_names) {
      names[static_cast<std::size_t>(k)] =
          data.feature_names[static_cast<std::size_t>(j)];
    }
  }
  return Dataset<T>(data.time, data.status, std::move(x), std::move(names));
}

// ========================= step functions =========================

/**
 * A right-continuous nondecreasing step function given by jump positions and
 * sizes; the value at t is the sum of all jumps at positions <= t.  Used for
 * cumulative-hazard estimates.
 */
template <class T>
struct StepFunction {
  vec_t<T> jump_times;  // strictly ascending
  vec_t<T> jump_sizes;  // nonnegative
  bool no_events = false;  // true when built from a sample with no events

  /** Value at t (right-continuous cumulative sum). */
  T operator()(T t) const {
    T acc = T(0);
    for (Eigen::Index j = 0; j < jump_times.size() && jump_times[j] <= t; ++j) {
      acc += jump_sizes[j];
    }
    return acc;
  }

  /** Cumulative sums aligned with jump_times. */
  vec_t<T> cumulative() const {
    vec_t<T> out(jump_sizes.size());
    T acc = T(0);
    for (Eigen::Index j = 0; j < jump_sizes.size(); ++j) {
      acc += jump_sizes[j];
      out[j] = acc;
    }
    return out;
  }
};

/**
 * Nonparametric cumulative-hazard estimate: a jump of d_j / |R_j| at each
 * distinct event time.  A sample with no events yields an empty, flagged
 * step function.
 */
template <class T>
StepFunction<T> nelson_aalen(const Dataset<T>& data) {
  StepFunction<T> out;
  out.jump_times = data.event_time;
  out.jump_sizes.resize(data.n_times);
  for (Eigen::Index j = 0; j < data.n_times; ++j) {
    out.jump_sizes[j] =
        static_cast<T>(data.event_mult[j]) / static_cast<T>(data.risk_len[j]);
  }
  out.no_events = (data.n_events == 0);
  return out;
}

/**
 * Semiparametric cumulative-baseline-hazard estimate at coefficient vector
 * beta: a jump of d_j / sum_{i in R_j} exp(beta' X_i) at each distinct event
 * time (each tied event contributes its own jump with the shared
 * denominator).  At beta = 0 this coincides with nelson_aalen.
 *
 * The denominator is accumulated in max-shifted form, so the only failure
 * mode is a jump whose true value is unrepresentable; that raises
 * NumericError naming the offending linear predictor.
 */
template <class T>
StepFunction<T> breslow_baseline(const Dataset<T>& data, const vec_t<T>& beta) {
  if (beta.size() != data.p) {
    throw ValidationError("breslow_baseline: beta length != covariate count");
  }
  StepFunction<T> out;
  out.jump_times = data.event_time;
  out.jump_sizes.resize(data.n_times);
  out.no_events = (data.n_events == 0);
  if (data.n_times == 0) return out;

  const vec_t<T> eta = data.X_sorted * beta;
  // Walk the descending-time prefix once, keeping a running max shift.
  T shift = -std::numeric_limits<T>::infinity();
  T acc = T(0);
  Eigen::Index j = data.n_times - 1;  // event times visited large-risk last
  for (Eigen::Index k = 0; k < data.n && j >= 0; ++k) {
    const T e = eta[k];
    if (e > shift) {
      acc *= std::exp(shift - e);  // exp(-inf - e) = 0 handles the first step
      shift = e;
    }
    acc += std::exp(e - shift);
    while (j >= 0 && data.risk_len[j] == k + 1) {
      const T log_denom = shift + std::log(acc);
      const T jump =
          static_cast<T>(data.event_mult[j]) * std::exp(-log_denom);
      if (!std::isfinite(jump)) {
        throw NumericError(
            "breslow_baseline: jump overflow at event time " +
            std::to_string(static_cast<double>(data.event_time[j])) +
            " (extreme linear predictor " +
            std::to_string(static_cast<double>(shift)) + ")");
      }
      out.jump_sizes[j] = jump;
      --j;
    }
  }
  return out;
}

}  // namespace coxfold

#endif  // COXFOLD_SURVIVAL_DATA_HPP
