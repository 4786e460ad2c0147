#include "rscca/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "rscca/errors.hpp"

namespace rscca {

namespace {

Matrix orthonormal_basis(const Matrix& m, const char* which)
{
    Eigen::ColPivHouseholderQR<Matrix> rank_check(m);
    if (rank_check.rank() < m.cols())
        throw RankDeficientError(std::string("subspace_angle: ") + which + " is not of full column rank");
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

Matrix drop_row(const Matrix& m, Index row)
{
    Matrix out(m.rows() - 1, m.cols());
    out.topRows(row) = m.topRows(row);
    out.bottomRows(m.rows() - row - 1) = m.bottomRows(m.rows() - row - 1);
    return out;
}

double fold_discrepancy(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int r, Index i)
{
    const Matrix xt = drop_row(x, i);
    const Matrix yt = drop_row(y, i);
    const CcaFit fit = fit_cca(xt, yt, cfg, r);
    const Vector xi = x.row(i).transpose() - fit.x_center;
    const Vector yi = y.row(i).transpose() - fit.y_center;
    const Vector u = fit.a.transpose() * xi;
    Vector v = fit.b.transpose() * yi;
    // variates are compared with the orientation the fit pairs them in
    for (Index j = 0; j < v.size(); ++j)
        if (fit.correlations(j) < 0.0) v(j) = -v(j);
    return (u - v).squaredNorm();
}

CvResult score_folds(const std::vector<double>& disc, double alpha)
{
    CvResult out;
    out.alpha = alpha;
    out.discrepancies = disc;
    std::vector<double> ok;
    for (double d : disc) {
        if (std::isnan(d))
            ++out.failures;
        else
            ok.push_back(d);
    }
    const int n = static_cast<int>(disc.size());
    const int h = std::min(static_cast<int>(std::floor(n * alpha + 1e-9)), static_cast<int>(ok.size()));
    if (h <= 0) throw Error("cross-validation: no usable folds");
    std::sort(ok.begin(), ok.end());
    out.folds_used = h;
    out.score = std::accumulate(ok.begin(), ok.begin() + h, 0.0) / h;
    return out;
}

}  // namespace

AngleReport subspace_angle(const Matrix& est, const Matrix& truth)
{
    if (est.rows() != truth.rows()) throw InputError("subspace_angle: row mismatch");
    if (est.cols() < 1 || truth.cols() < 1) throw InputError("subspace_angle: empty matrix");
    const Matrix q1 = orthonormal_basis(est, "estimate");
    const Matrix q2 = orthonormal_basis(truth, "truth");
    const Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
    AngleReport out;
    out.singular_values = svd.singularValues();
    const double c1 = std::clamp(out.singular_values(0), 0.0, 1.0);
    if (c1 * c1 < 0.5) {
        out.angle = std::acos(c1);
    } else {
        // acos loses half the digits near 1; the sine from the projection residual does not
        const Matrix& small = q1.cols() <= q2.cols() ? q1 : q2;
        const Matrix& big = q1.cols() <= q2.cols() ? q2 : q1;
        const Matrix resid = small - big * (big.transpose() * small);
        const Eigen::JacobiSVD<Matrix> rs(resid);
        out.angle = std::asin(std::min(rs.singularValues()(rs.singularValues().size() - 1), 1.0));
    }
    return out;
}

SparsityReport sparsity_rates(const Matrix& est, const Matrix& truth, double zero_threshold)
{
    if (est.rows() != truth.rows() || est.cols() != truth.cols()) throw InputError("sparsity_rates: shape mismatch");
    SparsityReport out;
    for (Index j = 0; j < est.cols(); ++j) {
        for (Index i = 0; i < est.rows(); ++i) {
            const bool est_nz = std::abs(est(i, j)) >= zero_threshold && est(i, j) != 0.0;
            const bool true_nz = truth(i, j) != 0.0;
            if (true_nz)
                est_nz ? ++out.true_positive : ++out.false_negative;
            else
                est_nz ? ++out.false_positive : ++out.true_negative;
        }
    }
    const int pos = out.true_positive + out.false_negative;
    const int neg = out.true_negative + out.false_positive;
    if (pos > 0) out.tpr = static_cast<double>(out.true_positive) / pos;
    if (neg > 0) out.tnr = static_cast<double>(out.true_negative) / neg;
    return out;
}

std::vector<CvResult> cv_scores(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int r,
                                const std::vector<double>& alphas, const CvOptions& opts)
{
    if (x.rows() != y.rows())
        throw InputError("X has " + std::to_string(x.rows()) + " rows but Y has " + std::to_string(y.rows()));
    const Index n = x.rows();
    if (n < 10) throw InputError("cross-validation needs at least 10 observations");
    for (double a : alphas)
        if (!(a > 0.0 && a <= 1.0)) throw InputError("CV trimming alpha must be in (0, 1]");

    MethodConfig fold_cfg = cfg;
    if (!opts.refit_lambda && is_sparse(cfg.variant)) {
        const CcaFit full = fit_cca(x, y, cfg, r);
        fold_cfg.pair_lambdas.clear();
        for (const auto& log : full.logs) fold_cfg.pair_lambdas.push_back({log.lambda_a, log.lambda_b});
    }

    std::vector<double> disc(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index i = next++; i < n; i = next++) {
            try {
                disc[static_cast<std::size_t>(i)] = fold_discrepancy(x, y, fold_cfg, r, i);
            } catch (const Error&) {
                // recorded as a failed fold
            }
        }
    };
    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<CvResult> out;
    for (double a : alphas) out.push_back(score_folds(disc, a));
    return out;
}

CvResult cv_score(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int r, double alpha,
                  const CvOptions& opts)
{
    return cv_scores(x, y, cfg, r, {alpha}, opts).front();
}

RunSummary summarize_runs(std::span<const double> values)
{
    if (values.empty()) throw InputError("summarize_runs: no values");
    RunSummary out;
    out.median = median(values);
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return out;
}

}  // namespace rscca
