#include "rscca/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "rscca/errors.hpp"

namespace rscca {

namespace {

struct Scatter {
    Vector mean;
    Matrix cov;
    double det = 0.0;
    bool singular = false;
};

Scatter scatter_of(const Matrix& data, const Subset& rows)
{
    const Matrix sub = take_rows(data, rows);
    Scatter s;
    s.mean = sub.colwise().mean();
    const Matrix c = sub.rowwise() - s.mean.transpose();
    s.cov = (c.transpose() * c) / static_cast<double>(rows.size());
    s.det = s.cov.determinant();
    const double diag = s.cov.diagonal().prod();
    s.singular = !(s.det > 1e-12 * std::max(diag, std::numeric_limits<double>::min()));
    return s;
}

Vector mahalanobis_sq(const Matrix& data, const Vector& mean, const Matrix& cov)
{
    const Eigen::LLT<Matrix> llt(cov);
    const Matrix c = (data.rowwise() - mean.transpose()).transpose();
    const Matrix z = llt.matrixL().solve(c);
    return z.colwise().squaredNorm().transpose();
}

struct McdCandidate {
    Subset fitted_on;
    Subset subset;
    Scatter sc;
    std::vector<double> trace;
    bool converged = false;
    int steps = 0;
};

bool better(const McdCandidate& a, const McdCandidate& b)
{
    const double tol = 1e-12 * std::max({std::abs(a.sc.det), std::abs(b.sc.det), 1e-300});
    if (std::abs(a.sc.det - b.sc.det) > tol) return a.sc.det < b.sc.det;
    return a.subset < b.subset;
}

}  // namespace

double chi2_quantile(double p, double dof)
{
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

McdResult mcd(const Matrix& data, int h, const McdOptions& opts)
{
    const int n = static_cast<int>(data.rows());
    const int d = static_cast<int>(data.cols());
    if (d < 1) throw InputError("MCD needs at least one column");
    if (n < d + 2) throw InputError("MCD needs at least " + std::to_string(d + 2) + " observations");
    if (!data.allFinite()) throw InputError("MCD input contains non-finite values");
    if (h < d + 1 || h > n) throw InputError("MCD subset size " + std::to_string(h) + " out of range");

    std::mt19937_64 rng(opts.seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    auto evaluate = [&](McdCandidate& c) {
        c.sc = scatter_of(data, c.fitted_on);
        if (c.sc.singular) {
            // exact fit: nothing beats a zero determinant
            c.subset = c.fitted_on;
            c.sc.det = 0.0;
            c.converged = true;
        } else {
            c.subset = smallest_indices(mahalanobis_sq(data, c.sc.mean, c.sc.cov), h);
        }
        c.trace.push_back(c.sc.det);
    };
    auto cstep = [&](McdCandidate& c) {
        if (c.converged || c.subset == c.fitted_on) {
            c.converged = true;
            return;
        }
        c.fitted_on = c.subset;
        ++c.steps;
        evaluate(c);
    };
    // grow a singular start with random extra rows until it has full rank or reaches h
    auto start_from = [&](Subset s) {
        Scatter sc = scatter_of(data, s);
        if (sc.singular) {
            std::shuffle(order.begin(), order.end(), rng);
            for (int idx : order) {
                if (!sc.singular || static_cast<int>(s.size()) >= h) break;
                if (std::find(s.begin(), s.end(), idx) != s.end()) continue;
                s.push_back(idx);
                std::sort(s.begin(), s.end());
                sc = scatter_of(data, s);
            }
        }
        McdCandidate c;
        c.fitted_on = std::move(s);
        return c;
    };

    const auto budget = static_cast<std::uint64_t>(std::max(opts.n_starts, 1));
    const bool exhaustive = binomial(n, d + 1, budget + 1) <= budget;
    std::vector<Subset> starts;
    if (exhaustive) {
        starts = all_subsets(n, d + 1);
    } else {
        std::vector<int> pool = order;
        for (int s = 0; s < opts.n_starts; ++s) {
            for (int k = 0; k <= d; ++k) {
                std::uniform_int_distribution<int> pick(k, n - 1);
                std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
            }
            Subset sub(pool.begin(), pool.begin() + d + 1);
            std::sort(sub.begin(), sub.end());
            starts.push_back(std::move(sub));
        }
    }

    std::vector<McdCandidate> pool;
    pool.reserve(starts.size());
    for (Subset& s : starts) {
        McdCandidate c = start_from(std::move(s));
        evaluate(c);
        // the start subset is smaller than h; its objective is not comparable yet
        c.trace.clear();
        for (int k = 0; k < opts.n_init_csteps; ++k) cstep(c);
        pool.push_back(std::move(c));
    }
    std::sort(pool.begin(), pool.end(), better);

    std::vector<McdCandidate> kept;
    const std::size_t keep = exhaustive ? pool.size() : static_cast<std::size_t>(std::max(opts.n_keep, 1));
    for (auto& c : pool) {
        if (kept.size() >= keep) break;
        if (std::any_of(kept.begin(), kept.end(), [&](const McdCandidate& k) { return k.subset == c.subset; }))
            continue;
        kept.push_back(std::move(c));
    }
    for (auto& c : kept)
        while (!c.converged && c.steps < opts.max_csteps) cstep(c);
    std::sort(kept.begin(), kept.end(), better);

    McdCandidate& best = kept.front();
    if (best.fitted_on != best.subset) {
        best.fitted_on = best.subset;
        evaluate(best);
    }
    McdResult out;
    out.location = best.sc.mean;
    out.covariance = best.sc.cov;
    out.subset = best.fitted_on;
    out.determinant = best.sc.det;
    out.trace = best.trace;
    for (Index j = 0; j < out.covariance.rows(); ++j)
        if (!(out.covariance(j, j) > 0.0))
            throw DegenerateDataError("degenerate data: zero variance in coordinate " + std::to_string(j) +
                                      " of the MCD subset");
    if (d >= 2) {
        const double r = out.covariance(0, 1) / std::sqrt(out.covariance(0, 0) * out.covariance(1, 1));
        out.correlation = std::clamp(r, -1.0, 1.0);
    } else {
        out.correlation = 1.0;
    }
    return out;
}

McdResult mcd_bivariate(const Matrix& pairs, double trim, const McdOptions& opts)
{
    if (pairs.cols() != 2) throw InputError("bivariate MCD needs exactly 2 columns");
    if (pairs.rows() < 4) throw InputError("bivariate MCD needs at least 4 observations");
    if (!(trim >= 0.0 && trim < 1.0)) throw InputError("MCD trim fraction must be in [0, 1)");
    const int n = static_cast<int>(pairs.rows());
    const int h = std::max(3, static_cast<int>(std::floor((1.0 - trim) * n)));
    return mcd(pairs, h, opts);
}

double robust_correlation(const Vector& u, const Vector& v, std::uint64_t seed, int n_starts)
{
    if (u.size() != v.size()) throw InputError("robust_correlation: length mismatch");
    Matrix pairs(u.size(), 2);
    pairs.col(0) = u;
    pairs.col(1) = v;
    McdOptions opts;
    opts.seed = seed;
    opts.n_starts = n_starts;
    return mcd_bivariate(pairs, 0.25, opts).correlation;
}

Vector robust_first_pc(const Matrix& data, std::uint64_t seed, int n_random)
{
    const Index n = data.rows();
    const Index q = data.cols();
    if (q == 0) throw InputError("robust_first_pc: no columns");
    if (n < 3) throw InputError("robust_first_pc needs at least 3 observations");
    if (q == 1) return Vector::Ones(1);

    const Matrix centered = data.rowwise() - column_medians(data).transpose();
    Matrix dirs(q, n + n_random);
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
        const double nrm = centered.row(i).norm();
        if (nrm > 0.0) dirs.col(count++) = centered.row(i).transpose() / nrm;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < n_random; ++k) {
        Vector g(q);
        for (Index j = 0; j < q; ++j) g(j) = gauss(rng);
        if (g.norm() > 0.0) dirs.col(count++) = g / g.norm();
    }
    const Matrix proj = centered * dirs.leftCols(count);

    double best = 0.0;
    Index arg = -1;
    for (Index k = 0; k < count; ++k) {
        const double s = mad(proj.col(k));
        if (s > best) {
            best = s;
            arg = k;
        }
    }
    if (arg < 0) throw DegenerateDataError("degenerate data: zero MAD in every candidate direction");
    Vector out = dirs.col(arg);
    fix_sign(out);
    return out;
}

Vector classical_first_pc(const Matrix& data)
{
    const Index q = data.cols();
    if (q == 0) throw InputError("classical_first_pc: no columns");
    if (q == 1) return Vector::Ones(1);
    const Matrix c = data.rowwise() - data.colwise().mean();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(c.transpose() * c);
    Vector out = eig.eigenvectors().col(q - 1);
    if (!(eig.eigenvalues()(q - 1) > 0.0)) throw DegenerateDataError("degenerate data: zero covariance");
    fix_sign(out);
    return out.normalized();
}

std::vector<DistancePair> distance_table(const Matrix& x, std::uint64_t seed)
{
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    if (d < 1) throw InputError("distance_table: no columns");
    if (n <= d + 1) throw InputError("distance_table needs more observations than variables");
    if (!x.allFinite()) throw InputError("distance_table: non-finite input");

    const Vector mean = x.colwise().mean();
    const Matrix c = x.rowwise() - mean.transpose();
    const Matrix cov = c.transpose() * c / static_cast<double>(n);
    const Eigen::LLT<Matrix> llt(cov);
    const double diag = cov.diagonal().prod();
    if (llt.info() != Eigen::Success || !(cov.determinant() > 1e-12 * diag))
        throw DegenerateDataError("degenerate data: singular sample covariance");
    const Vector classical = mahalanobis_sq(x, mean, cov);

    const int h = static_cast<int>(std::floor(0.75 * n));
    McdOptions opts;
    opts.seed = seed;
    const McdResult raw = mcd(x, std::max(h, d + 1), opts);
    if (raw.determinant <= 0.0) throw DegenerateDataError("degenerate data: MCD subset covariance is singular");

    // consistency factors for the raw and reweighted scatter under normality
    const boost::math::chi_squared_distribution<double> chi_d(d), chi_d2(d + 2);
    const double alpha = static_cast<double>(raw.subset.size()) / n;
    const double raw_factor = alpha / boost::math::cdf(chi_d2, boost::math::quantile(chi_d, alpha));
    const double cut2 = chi2_quantile(0.975, d);
    const Vector raw_d2 = mahalanobis_sq(x, raw.location, raw.covariance * raw_factor);
    Subset keep;
    for (int i = 0; i < n; ++i)
        if (raw_d2(i) <= cut2) keep.push_back(i);

    Vector loc = raw.location;
    Matrix scat = raw.covariance * raw_factor;
    if (static_cast<int>(keep.size()) > d + 1) {
        const Matrix sub = take_rows(x, keep);
        const Vector m = sub.colwise().mean();
        const Matrix sc = sub.rowwise() - m.transpose();
        const Matrix cv = sc.transpose() * sc / static_cast<double>(keep.size());
        const double rw_factor = 0.975 / boost::math::cdf(chi_d2, cut2);
        if (cv.determinant() > 0.0) {
            loc = m;
            scat = cv * rw_factor;
        }
    }
    const Vector robust = mahalanobis_sq(x, loc, scat);

    std::vector<DistancePair> out(static_cast<std::size_t>(n));
    const double cutoff = std::sqrt(cut2);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = {std::sqrt(classical(i)), std::sqrt(robust(i)), cutoff};
    return out;
}

}  // namespace rscca
