#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rscca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Sorted list of row indices.
using Subset = std::vector<int>;

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Median with the midpoint convention for even lengths. Input is copied.
double median(std::span<const double> values);
double median(const Vector& values);

/// Median absolute deviation about the median, unscaled.
double mad(const Vector& values);

/// Pearson correlation; returns 0 when either argument has zero variance.
double pearson(const Vector& u, const Vector& v);

/// Column-wise median.
Vector column_medians(const Matrix& m);

/// Indices of the h smallest entries, ties broken by lower index; result sorted ascending.
Subset smallest_indices(const Vector& values, int h);

/// Sum of the h smallest entries of values.
double trimmed_sum(const Vector& values, int h);

/// Rows of m selected by idx.
Matrix take_rows(const Matrix& m, const Subset& idx);
Vector take_rows(const Vector& v, const Subset& idx);

/// Angle in [0, pi/2] between the lines spanned by a and b (zero vectors give pi/2).
double line_angle(const Vector& a, const Vector& b);

/// Flip the sign so the largest-magnitude entry is positive (lowest index on ties).
void fix_sign(Eigen::Ref<Vector> v);

/// Number of entries with magnitude above threshold.
int count_nonzero(const Vector& v, double threshold = 0.0);

/// n choose k, saturating at max_value.
std::uint64_t binomial(int n, int k, std::uint64_t max_value = UINT64_MAX);

/// All k-subsets of {0..n-1} in lexicographic order.
std::vector<Subset> all_subsets(int n, int k);

}  // namespace rscca
