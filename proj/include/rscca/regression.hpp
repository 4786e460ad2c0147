#pragma once

// Univariate-response regression solvers: least squares, lasso, least trimmed
// squares and its L1-penalized version, plus the outlier-reweighting step.
//
// Penalized objectives share one convention. On a row subset S of size m the
// lasso minimizes
//
//     (1 / 2m) * sum_{i in S} r_i^2 + lambda * sum_j s_j |beta_j|
//
// where s_j are fixed column scales computed once from the full sample. The
// trimmed estimators multiply this through by 2h, so the value stored in
// RegressionFit::objective is
//
//     sum_{i in subset} r_i^2 + penalty_weight * sum_j s_j |beta_j|
//
// with penalty_weight = 2 * |subset| * lambda, which is what the C-steps
// decrease monotonically.

#include <cstdint>
#include <vector>

#include "rscca/linalg.hpp"

namespace rscca {

enum class FitKind { ols, lasso, lts, sparse_lts };

struct RegressionProblem {
    Matrix predictors;  // n x d
    Vector response;    // n
    double lambda = 0.0;
    int trim_count = 0;  // h; 0 means no trimming (h = n)
    bool intercept = false;
    bool standardize = true;
    bool min_norm_fallback = false;  // rank-deficient least squares returns the minimum-norm solution

    int rows() const { return static_cast<int>(predictors.rows()); }
    int cols() const { return static_cast<int>(predictors.cols()); }
    int h() const { return trim_count > 0 ? trim_count : rows(); }
};

/// Random-start budget for the trimmed estimators.
struct SearchOptions {
    int n_starts = 500;      // elemental starts; enumerated exhaustively when fewer subsets exist
    int n_init_csteps = 2;   // C-steps applied to every start
    int n_keep = 10;         // best starts iterated to convergence
    int max_csteps = 100;
    std::vector<Subset> warm_starts;  // extra starting subsets, fitted as given
    std::uint64_t seed = 0;
};

struct RegressionFit {
    FitKind kind = FitKind::ols;
    Vector coefficients;
    double intercept = 0.0;
    Subset subset;   // rows the coefficients were fitted on (sorted)
    Vector residuals;
    double objective = 0.0;
    double lambda = 0.0;
    double penalty_weight = 0.0;
    Vector penalty_scales;
    bool reweighted = false;
    bool reweight_fallback = false;
    bool converged = true;
    int iterations = 0;
    double residual_scale = 0.0;  // consistency-corrected scale used by reweight()
    std::vector<double> trace;        // objective after every C-step of the reported candidate
    std::vector<Subset> candidates;   // refined candidate subsets, best first

    int nonzeros() const { return count_nonzero(coefficients); }
    /// Penalty term recomputed from the stored fields.
    double penalty() const;
};

/// Throws InputError for non-finite values or inconsistent shapes.
void validate(const RegressionProblem& prob);

/// Fixed column scales used by the penalty (ones when standardize is off).
Vector column_scales(const RegressionProblem& prob, bool robust);

/// Smallest lambda for which the full-sample lasso solution is identically zero.
double lambda_max(const RegressionProblem& prob);

/// size values from lambda_max down to lambda_max * ratio, log-spaced, descending.
std::vector<double> lambda_grid(double lambda_max, int size, double ratio);

RegressionFit fit_ols(const RegressionProblem& prob);

/// Cyclic coordinate descent on scaled columns; max coefficient change below 1e-7 stops it.
/// warm, when given, seeds the iterations with its coefficients.
RegressionFit fit_lasso(const RegressionProblem& prob, const RegressionFit* warm = nullptr);

RegressionFit fit_lts(const RegressionProblem& prob, const SearchOptions& opts = {});

RegressionFit fit_sparse_lts(const RegressionProblem& prob, const SearchOptions& opts = {});

/// Refit on observations whose standardized residual is within the 98.75% normal quantile.
RegressionFit reweight(const RegressionFit& fit, const RegressionProblem& prob);

/// 1 / sqrt(E[z^2 | |z| <= q]) with q the (1 + alpha)/2 normal quantile; corrects a trimmed scale.
double lts_consistency_factor(double alpha);

/// Normal quantile used as reweighting cutoff.
double reweight_cutoff();

/// Sum of the h smallest squared residuals of fit plus its penalty term.
double trimmed_objective(const RegressionFit& fit, int h);

}  // namespace rscca
