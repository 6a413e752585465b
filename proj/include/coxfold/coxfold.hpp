#ifndef COXFOLD_COXFOLD_HPP
#define COXFOLD_COXFOLD_HPP

// Umbrella header: the whole library in one include.
//
// coxfold is a header-only engine for sparse proportional-hazards regression
// on right-censored data: partial-likelihood kernels built on risk-set prefix
// scans, folded-concave penalties (lasso / scad / mcp / sica) solved by
// coordinate ascent with exact univariate maximizers, warm-started
// regularization paths, K-fold level selection, local-maximum certificates,
// and a reproducible Monte Carlo study harness.

#include "types.hpp"      // Eigen aliases shared across the library
#include "errors.hpp"     // error taxonomy (parse/schema/validation/numeric)
#include "rng.hpp"        // deterministic RNG + stream splitting
#include "parallel.hpp"   // slot-indexed deterministic parallel loops
#include "survival_data.hpp"  // Dataset, risk sets, baseline step functions
#include "csv.hpp"        // ingestion and round-trip numeric formatting
#include "likelihood.hpp" // log partial likelihood, score, information
#include "penalties.hpp"  // penalty families and the univariate maximizer
#include "optimizer.hpp"  // coordinate ascent, paths, restricted fits
#include "kkt.hpp"        // local-maximum certificates
#include "selection.hpp"  // K-fold criteria and level selection
#include "simulate.hpp"   // synthetic designs, metrics, study harness

#endif  // COXFOLD_COXFOLD_HPP
