#pragma once

// Robust multivariate building blocks: MCD location/scatter, MCD correlation,
// projection-pursuit first principal component and distance diagnostics.

#include <cstdint>
#include <vector>

#include "rscca/linalg.hpp"

namespace rscca {

struct McdOptions {
    int n_starts = 500;
    int n_init_csteps = 2;
    int n_keep = 10;
    int max_csteps = 100;
    std::uint64_t seed = 0;
};

struct McdResult {
    Vector location;
    Matrix covariance;  // raw subset covariance (divisor h), no consistency factor
    Subset subset;
    double determinant = 0.0;
    double correlation = 0.0;  // first two coordinates
    std::vector<double> trace;  // determinant after each C-step of the reported candidate
};

/// FAST-MCD with (d + 1)-point starts; h observations kept.
McdResult mcd(const Matrix& data, int h, const McdOptions& opts = {});

/// MCD on an n x 2 matrix with h = floor((1 - trim) n).
McdResult mcd_bivariate(const Matrix& pairs, double trim = 0.25, const McdOptions& opts = {});

/// Correlation field of the bivariate MCD with 25% trimming.
double robust_correlation(const Vector& u, const Vector& v, std::uint64_t seed = 0, int n_starts = 500);

/// Projection-pursuit direction maximizing the MAD of the median-centered projections.
/// Candidates are the normalized centered observations plus n_random seeded unit vectors.
Vector robust_first_pc(const Matrix& data, std::uint64_t seed = 0, int n_random = 200);

/// Leading eigenvector of the sample covariance.
Vector classical_first_pc(const Matrix& data);

struct DistancePair {
    double classical = 0.0;
    double robust = 0.0;
    double cutoff = 0.0;
};

/// Mahalanobis and reweighted-MCD robust distances with the sqrt chi-square 97.5% cutoff.
std::vector<DistancePair> distance_table(const Matrix& x, std::uint64_t seed = 0);

double chi2_quantile(double p, double dof);

}  // namespace rscca
