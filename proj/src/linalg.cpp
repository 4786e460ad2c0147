#include "rscca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace rscca {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double median(std::span<const double> values)
{
    std::vector<double> v(values.begin(), values.end());
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double median(const Vector& values)
{
    return median(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

double mad(const Vector& values)
{
    const double m = median(values);
    const Vector dev = (values.array() - m).abs();
    return median(dev);
}

double pearson(const Vector& u, const Vector& v)
{
    const Vector uc = u.array() - u.mean();
    const Vector vc = v.array() - v.mean();
    const double su = uc.squaredNorm();
    const double sv = vc.squaredNorm();
    if (su <= 0.0 || sv <= 0.0) return 0.0;
    return std::clamp(uc.dot(vc) / std::sqrt(su * sv), -1.0, 1.0);
}

Vector column_medians(const Matrix& m)
{
    Vector out(m.cols());
    for (Index j = 0; j < m.cols(); ++j) out(j) = median(Vector(m.col(j)));
    return out;
}

Subset smallest_indices(const Vector& values, int h)
{
    const int n = static_cast<int>(values.size());
    h = std::clamp(h, 0, n);
    Subset idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    auto less = [&](int a, int b) {
        if (values(a) != values(b)) return values(a) < values(b);
        return a < b;
    };
    if (h < n) {
        std::nth_element(idx.begin(), idx.begin() + h, idx.end(), less);
        idx.resize(static_cast<std::size_t>(h));
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

double trimmed_sum(const Vector& values, int h)
{
    const Subset idx = smallest_indices(values, h);
    double s = 0.0;
    for (int i : idx) s += values(i);
    return s;
}

Matrix take_rows(const Matrix& m, const Subset& idx)
{
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(idx[k]);
    return out;
}

Vector take_rows(const Vector& v, const Subset& idx)
{
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
    return out;
}

double line_angle(const Vector& a, const Vector& b)
{
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return std::numbers::pi / 2;
    const double c = std::min(1.0, std::abs(a.dot(b)) / (na * nb));
    return std::acos(c);
}

void fix_sign(Eigen::Ref<Vector> v)
{
    if (v.size() == 0) return;
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(best))) best = i;
    if (v(best) < 0) v = -v;
}

int count_nonzero(const Vector& v, double threshold)
{
    return static_cast<int>((v.array().abs() > threshold).count());
}

std::uint64_t binomial(int n, int k, std::uint64_t max_value)
{
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        // r * (n - k + i) / i stays integral at every step
        const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        if (r > max_value / num) return max_value;
        r = r * num / static_cast<std::uint64_t>(i);
        if (r >= max_value) return max_value;
    }
    return r;
}

std::vector<Subset> all_subsets(int n, int k)
{
    std::vector<Subset> out;
    if (k < 0 || k > n) return out;
    Subset cur(static_cast<std::size_t>(k));
    std::iota(cur.begin(), cur.end(), 0);
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++cur[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

}  // namespace rscca
