#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rscca/cca.hpp"
#include "rscca/linalg.hpp"

namespace rscca {

struct AngleReport {
    double angle = 0.0;       // radians in [0, pi/2]
    Vector singular_values;   // cosines of the principal angles, descending
};

/// Minimum principal angle between the column spaces of est and truth (QR, then SVD of Q1'Q2).
AngleReport subspace_angle(const Matrix& est, const Matrix& truth);

struct SparsityReport {
    std::optional<double> tpr;  // absent when truth has no nonzero entry
    std::optional<double> tnr;  // absent when truth has no zero entry
    int true_positive = 0;
    int false_negative = 0;
    int true_negative = 0;
    int false_positive = 0;
};

/// Exact count ratios; entries of est with magnitude below zero_threshold count as zero.
SparsityReport sparsity_rates(const Matrix& est, const Matrix& truth, double zero_threshold = 1e-12);

struct CvOptions {
    bool refit_lambda = true;  // false: penalties fixed at the full-sample choice
    int threads = 1;
};

struct CvResult {
    double alpha = 1.0;
    double score = 0.0;
    int folds_used = 0;   // h = floor(n alpha), capped by successful folds
    int failures = 0;
    std::vector<double> discrepancies;  // per left-out row; NaN where the refit failed
};

/// Leave-one-out score averaged over the floor(n alpha) smallest squared discrepancies.
CvResult cv_score(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int r, double alpha,
                  const CvOptions& opts = {});

/// Same folds scored at several trimming levels.
std::vector<CvResult> cv_scores(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int r,
                                const std::vector<double>& alphas, const CvOptions& opts = {});

struct RunSummary {
    double median = 0.0;
    double mean = 0.0;
};

RunSummary summarize_runs(std::span<const double> values);

}  // namespace rscca
