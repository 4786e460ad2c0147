#pragma once

// Canonical correlation analysis by alternating regressions.
//
// Four estimators share one algorithm and differ only in the regression used
// for each step:
//
//   classical      least squares, Pearson correlations, ordinary first PC start
//   robust         reweighted LTS, MCD correlations, projection-pursuit start
//   sparse         lasso with BIC-selected penalty, Pearson correlations
//   robust_sparse  reweighted sparse LTS with BIC-selected penalty, MCD correlations
//
// Pair k is fitted on data deflated by the first k - 1 pairs and then
// re-expressed in the original variables by one more regression.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rscca/linalg.hpp"
#include "rscca/regression.hpp"

namespace rscca {

enum class Variant { classical, robust, sparse, robust_sparse };

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);
bool is_robust(Variant v);
bool is_sparse(Variant v);

struct MethodConfig {
    Variant variant = Variant::robust_sparse;
    double trim = 0.25;        // LTS trimming; h = floor((1 - trim) n)
    double tolerance = 1e-3;   // radians, successive-iterate angle
    int max_alternations = 50;
    int lambda_grid_size = 20;
    double lambda_ratio = 1e-3;
    std::vector<double> lambda_grid;  // replaces the data-driven grid when non-empty
    // Fixed penalties per pair: {regressions on X, regressions on Y}. Overrides the grid.
    std::vector<std::array<double, 2>> pair_lambdas;
    SearchOptions search;          // budget of a cold trimmed search
    int warm_random_starts = 0;    // random starts added to warm-started searches
    int mcd_starts = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PairLog {
    int iterations = 0;
    double angle_a = 0.0;
    double angle_b = 0.0;
    bool converged = false;
    double lambda_a = 0.0;  // last penalty on the X regressions
    double lambda_b = 0.0;  // last penalty on the Y regressions
    bool reweighted = false;
    std::vector<double> regression_objective;  // objective of the A update per sweep
    std::vector<double> pair_objective;        // 2 (1 - corr(Xa, Yb)) per sweep
};

struct CcaFit {
    Matrix a;  // p x r
    Matrix b;  // q x r
    Matrix u;  // n x r, centered X times a
    Matrix v;  // n x r
    Vector correlations;
    std::vector<PairLog> logs;
    Vector x_center;
    Vector y_center;
    MethodConfig config;
    int rank = 0;
    bool rank_selected = false;
    std::vector<double> all_correlations;  // every fitted pair when the rank was selected

    int rows() const { return static_cast<int>(u.rows()); }
};

struct PairEstimate {
    Vector a;
    Vector b;
    PairLog log;
};

struct LambdaChoice {
    double lambda = 0.0;
    int index = 0;
    RegressionFit fit;
    std::vector<double> grid;
    std::vector<double> bic;   // +inf where the fit was not scorable
    std::vector<int> nonzeros;
};

/// Warm-start subsets per grid position, carried between calls of one alternation.
struct LambdaCache {
    std::vector<Subset> subsets;
};

// The operations below take column-centered X (n x p) and Y (n x q); fit_cca does the centering.

/// Starting A: first PC of Y regressed on X, normalized.
Vector initial_direction(const Matrix& x, const Matrix& y, const MethodConfig& cfg);

PairEstimate fit_first_pair(const Matrix& x, const Matrix& y, const MethodConfig& cfg);

/// Column-by-column residuals of m regressed on the lower-order variates, unpenalized.
Matrix deflate(const Matrix& m, const Matrix& variates, const MethodConfig& cfg);

/// Pair on deflated data, re-expressed in the original variables.
PairEstimate fit_higher_pair(const Matrix& x_deflated, const Matrix& y_deflated, const Matrix& x,
                             const Matrix& y, const MethodConfig& cfg, int pair_index = 1);

/// Minimizes BIC over the grid. Lasso for the sparse variant, reweighted sparse LTS for robust_sparse.
/// Ties go to the smaller lambda. The path stops at the first unscorably dense fit.
LambdaChoice select_lambda(const RegressionProblem& tmpl, const std::vector<double>& grid, const MethodConfig& cfg,
                           LambdaCache* cache = nullptr, bool require_nonzero = false, std::uint64_t seed = 0);

/// Gaussian BIC of the active set of fit. The support is refit by least squares; for a trimmed
/// problem fit.subset is the raw h-subset and the refit is reweighted like reweight(). Scales use
/// residual degrees of freedom and a consistency factor at the retained fraction; the likelihood
/// runs over all n rows. +inf when not scorable, including active sets larger than half the rows
/// a refit is computed on.
double bic_score(const RegressionFit& fit, const RegressionProblem& prob);

/// argmax_j |rho_j| / |rho_{j+1}| (1-based); a zero denominator counts as +inf.
int rank_from_correlations(const std::vector<double>& rho);

int select_rank(const Matrix& x, const Matrix& y, const MethodConfig& cfg);

/// Full estimator. r defaults to the eigenvalue-ratio choice.
CcaFit fit_cca(const Matrix& x, const Matrix& y, const MethodConfig& cfg, std::optional<int> r = std::nullopt);

}  // namespace rscca
