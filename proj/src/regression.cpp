#include "rscca/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "rscca/errors.hpp"

namespace rscca {

namespace {

constexpr double kLassoTol = 1e-7;
constexpr int kLassoMaxPasses = 100000;
// pass budget for elemental starts and the cheap C-steps of the subset search
constexpr int kSearchPasses = 50;

double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Minimizes (1/2m)||y - X b||^2 + lambda ||b||_1 over b, in place.
// Covariance updates with Gram columns computed on first use. Between full sweeps the
// active set is solved directly or cycled. Returns the number of passes.
int lasso_cd(const Matrix& x, const Vector& y, double lambda, Vector& b, int max_passes)
{
    const Index m = x.rows();
    const Index d = x.cols();
    const double inv_m = 1.0 / static_cast<double>(m);
    const Vector c = x.transpose() * y * inv_m;
    Vector col_sq(d);
    for (Index j = 0; j < d; ++j) col_sq(j) = x.col(j).squaredNorm() * inv_m;

    Matrix gram(d, d);
    std::vector<char> have(static_cast<std::size_t>(d), 0);
    auto gram_col = [&](Index k) {
        if (!have[static_cast<std::size_t>(k)]) {
            gram.col(k).noalias() = x.transpose() * x.col(k) * inv_m;
            have[static_cast<std::size_t>(k)] = 1;
        }
        return gram.col(k);
    };
    Vector g = Vector::Zero(d);  // X'X b / m
    for (Index k = 0; k < d; ++k)
        if (b(k) != 0.0) g.noalias() += b(k) * gram_col(k);

    auto sweep = [&](bool active_only) {
        double max_change = 0.0;
        for (Index j = 0; j < d; ++j) {
            if (active_only && b(j) == 0.0) continue;
            if (col_sq(j) <= 0.0) {
                b(j) = 0.0;
                continue;
            }
            const double old = b(j);
            const double z = c(j) - g(j) + col_sq(j) * old;
            const double updated = soft_threshold(z, lambda) / col_sq(j);
            if (updated != old) {
                g.noalias() += (updated - old) * gram_col(j);
                b(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        return max_change;
    };

    // Moves the active block toward its exact solution under the current signs, dropping
    // coefficients that reach zero on the way. Each step lowers the objective.
    auto active_solve = [&]() {
        std::vector<Index> act;
        for (Index j = 0; j < d; ++j)
            if (b(j) != 0.0) act.push_back(j);
        bool moved = false;
        while (!act.empty() && static_cast<Index>(act.size()) < m) {
            const auto k = static_cast<Index>(act.size());
            Matrix gaa(k, k);
            Vector rhs(k);
            Vector cur(k);
            for (Index i = 0; i < k; ++i) {
                const Index j = act[static_cast<std::size_t>(i)];
                const auto col = gram_col(j);
                for (Index i2 = 0; i2 < k; ++i2) gaa(i2, i) = col(act[static_cast<std::size_t>(i2)]);
                cur(i) = b(j);
                rhs(i) = c(j) - lambda * (b(j) > 0.0 ? 1.0 : -1.0);
            }
            const Eigen::LDLT<Matrix> ldlt(gaa);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
            const Vector sol = ldlt.solve(rhs);
            if (!sol.allFinite()) break;
            double t = 1.0;
            for (Index i = 0; i < k; ++i)
                if (!(sol(i) * cur(i) > 0.0)) t = std::min(t, cur(i) / (cur(i) - sol(i)));
            const Vector next = cur + t * (sol - cur);
            std::vector<Index> keep;
            for (Index i = 0; i < k; ++i) {
                const Index j = act[static_cast<std::size_t>(i)];
                const bool hits = t < 1.0 && !(sol(i) * cur(i) > 0.0) && cur(i) / (cur(i) - sol(i)) <= t;
                b(j) = hits ? 0.0 : next(i);
                if (!hits) keep.push_back(j);
            }
            g.setZero();
            for (Index j : keep) g.noalias() += b(j) * gram_col(j);
            moved = true;
            if (t >= 1.0) break;
            act = std::move(keep);
        }
        return moved;
    };

    int passes = 0;
    while (passes < max_passes) {
        ++passes;
        if (sweep(false) < kLassoTol) break;
        if (active_solve()) continue;
        while (passes < max_passes) {
            ++passes;
            if (sweep(true) < kLassoTol) break;
        }
    }
    return passes;
}

struct LinearFit {
    Vector coef;
    double intercept = 0.0;
    Vector scaled;  // standardized-scale coefficients, lasso warm start
};

// Least squares on the given rows. Returns false when the design is rank deficient
// and min_norm is off.
LinearFit ols_rows(const Matrix& x, const Vector& y, bool intercept, bool min_norm)
{
    const Index m = x.rows();
    const Index d = x.cols();
    Matrix design(m, d + (intercept ? 1 : 0));
    if (intercept) {
        design.col(0).setOnes();
        design.rightCols(d) = x;
    } else {
        design = x;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    Vector sol;
    if (qr.rank() < design.cols()) {
        if (!min_norm) {
            throw RankDeficientError("rank-deficient design: rank " + std::to_string(qr.rank()) + " < " +
                                     std::to_string(design.cols()) + " columns");
        }
        sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(design).solve(y);
    } else {
        sol = qr.solve(y);
    }
    LinearFit out;
    if (intercept) {
        out.intercept = sol(0);
        out.coef = sol.tail(d);
    } else {
        out.coef = sol;
    }
    return out;
}

// Lasso on a row subset of the pre-scaled design. warm is in scaled units.
LinearFit lasso_rows(const Matrix& xs, const Vector& y, const Vector& scales, const Subset& rows,
                     double lambda, bool intercept, const Vector* warm, int* passes = nullptr,
                     int max_passes = kLassoMaxPasses)
{
    Matrix x = take_rows(xs, rows);
    Vector ys = take_rows(y, rows);
    Eigen::RowVectorXd xmean = Eigen::RowVectorXd::Zero(x.cols());
    double ymean = 0.0;
    if (intercept) {
        xmean = x.colwise().mean();
        ymean = ys.mean();
        x.rowwise() -= xmean;
        ys.array() -= ymean;
    }
    Vector b = warm ? *warm : Vector::Zero(x.cols());
    const int p = lasso_cd(x, ys, lambda, b, max_passes);
    if (passes) *passes = p;
    LinearFit out;
    out.scaled = b;
    out.coef = b.array() / scales.array();
    out.intercept = intercept ? ymean - xmean.dot(b) : 0.0;
    return out;
}

Matrix scaled_design(const Matrix& x, const Vector& scales)
{
    return x.array().rowwise() / scales.transpose().array();
}

Vector residuals_of(const RegressionProblem& prob, const Vector& coef, double intercept)
{
    Vector r = prob.response - prob.predictors * coef;
    r.array() -= intercept;
    return r;
}

Subset all_rows(int n)
{
    Subset s(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 0);
    return s;
}

RegressionFit make_fit(FitKind kind, const RegressionProblem& prob, const LinearFit& lf, Subset subset,
                       const Vector& scales, double lambda)
{
    RegressionFit fit;
    fit.kind = kind;
    fit.coefficients = lf.coef;
    fit.intercept = lf.intercept;
    fit.residuals = residuals_of(prob, lf.coef, lf.intercept);
    fit.lambda = lambda;
    fit.penalty_scales = scales;
    fit.penalty_weight = 2.0 * static_cast<double>(subset.size()) * lambda;
    double rss = 0.0;
    for (int i : subset) rss += fit.residuals(i) * fit.residuals(i);
    fit.subset = std::move(subset);
    fit.objective = rss + fit.penalty();
    return fit;
}

// Random or exhaustive starting subsets of the given size.
std::vector<Subset> starting_subsets(int n, int size, const SearchOptions& opts, bool& exhaustive)
{
    const auto budget = static_cast<std::uint64_t>(std::max(opts.n_starts, 0));
    exhaustive = binomial(n, size, budget + 1) <= budget;
    if (exhaustive) return all_subsets(n, size);

    std::mt19937_64 rng(opts.seed);
    std::vector<int> pool = all_rows(n);
    std::vector<Subset> out;
    out.reserve(static_cast<std::size_t>(opts.n_starts));
    for (int s = 0; s < opts.n_starts; ++s) {
        for (int k = 0; k < size; ++k) {
            std::uniform_int_distribution<int> pick(k, n - 1);
            std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        Subset sub(pool.begin(), pool.begin() + size);
        std::sort(sub.begin(), sub.end());
        out.push_back(std::move(sub));
    }
    return out;
}

struct Candidate {
    LinearFit fit;
    Subset fitted_on;
    Subset subset;  // h smallest squared residuals of fit
    double objective = 0.0;
    std::vector<double> trace;
    bool converged = false;
    bool exact = false;  // fit solved to full tolerance
    int steps = 0;
};

bool better(const Candidate& a, const Candidate& b)
{
    const double tol = 1e-12 * std::max({1.0, std::abs(a.objective), std::abs(b.objective)});
    if (std::abs(a.objective - b.objective) > tol) return a.objective < b.objective;
    return a.subset < b.subset;
}

// Concentration-step search shared by LTS and sparse LTS. fit_rows(rows, warm, cheap)
// returns the coefficient fit on the given rows; cheap fits may stop early.
template <class FitRows>
RegressionFit concentrate(const RegressionProblem& prob, const SearchOptions& opts, int start_size,
                          const Vector& scales, FitKind kind, FitRows fit_rows)
{
    const int n = prob.rows();
    const int h = prob.h();
    const double pen_weight = 2.0 * h * prob.lambda;

    auto evaluate = [&](Candidate& c) {
        const Vector r = residuals_of(prob, c.fit.coef, c.fit.intercept);
        const Vector sq = r.array().square();
        c.subset = smallest_indices(sq, h);
        double rss = 0.0;
        for (int i : c.subset) rss += sq(i);
        double pen = 0.0;
        if (pen_weight > 0.0) pen = pen_weight * (scales.array() * c.fit.coef.array().abs()).sum();
        c.objective = rss + pen;
        c.trace.push_back(c.objective);
    };
    auto cstep = [&](Candidate& c, bool cheap) {
        if (c.subset == c.fitted_on && (c.exact || cheap)) {
            c.converged = true;
            return;
        }
        c.fitted_on = c.subset;
        c.fit = fit_rows(c.fitted_on, &c.fit, cheap);
        c.exact = !cheap;
        ++c.steps;
        evaluate(c);
    };

    bool exhaustive = false;
    std::vector<Subset> starts = starting_subsets(n, start_size, opts, exhaustive);
    starts.insert(starts.begin(), opts.warm_starts.begin(), opts.warm_starts.end());

    std::vector<Candidate> pool;
    pool.reserve(starts.size());
    for (const Subset& s : starts) {
        Candidate c;
        c.fitted_on = s;
        c.fit = fit_rows(s, nullptr, true);
        evaluate(c);
        for (int k = 0; k < opts.n_init_csteps && !c.converged; ++k) cstep(c, true);
        pool.push_back(std::move(c));
    }

    std::sort(pool.begin(), pool.end(), better);
    // keep distinct subsets only
    std::vector<Candidate> kept;
    const std::size_t keep = exhaustive ? pool.size() : static_cast<std::size_t>(std::max(1, opts.n_keep));
    for (auto& c : pool) {
        if (kept.size() >= keep) break;
        const bool dup = std::any_of(kept.begin(), kept.end(),
                                     [&](const Candidate& k) { return k.subset == c.subset; });
        if (!dup) kept.push_back(std::move(c));
    }
    for (auto& c : kept) {
        c.converged = false;
        while (!c.converged && c.steps < opts.max_csteps) cstep(c, false);
    }

    std::sort(kept.begin(), kept.end(), better);
    Candidate& best = kept.front();
    // refit on the final subset so the reported coefficients belong to it
    if (best.fitted_on != best.subset || !best.exact) {
        best.fitted_on = best.subset;
        best.fit = fit_rows(best.fitted_on, &best.fit, false);
        evaluate(best);
    }

    RegressionFit fit = make_fit(kind, prob, best.fit, best.fitted_on, scales, prob.lambda);
    fit.objective = best.objective;
    fit.penalty_weight = pen_weight;
    fit.subset = best.subset;
    fit.converged = best.converged;
    fit.iterations = best.steps;
    fit.trace = best.trace;
    for (const auto& c : kept) fit.candidates.push_back(c.subset);
    return fit;
}

}  // namespace

double RegressionFit::penalty() const
{
    if (penalty_weight == 0.0 || coefficients.size() == 0) return 0.0;
    return penalty_weight * (penalty_scales.array() * coefficients.array().abs()).sum();
}

void validate(const RegressionProblem& prob)
{
    const int n = prob.rows();
    if (prob.response.size() != n)
        throw InputError("predictors have " + std::to_string(n) + " rows but response has " +
                         std::to_string(prob.response.size()));
    if (n < 2) throw InputError("regression needs at least 2 observations");
    if (!prob.predictors.allFinite() || !prob.response.allFinite())
        throw InputError("regression input contains non-finite values");
    if (!(prob.lambda >= 0.0) || !std::isfinite(prob.lambda)) throw InputError("lambda must be finite and >= 0");
    if (prob.trim_count < 0 || prob.trim_count > n)
        throw InputError("trim count " + std::to_string(prob.trim_count) + " outside [0, " + std::to_string(n) + "]");
}

Vector column_scales(const RegressionProblem& prob, bool robust)
{
    const Index d = prob.predictors.cols();
    Vector s = Vector::Ones(d);
    if (!prob.standardize) return s;
    const double n = static_cast<double>(prob.rows());
    for (Index j = 0; j < d; ++j) {
        const Vector col = prob.predictors.col(j);
        double v = 0.0;
        if (robust) {
            const double center = prob.intercept ? median(col) : 0.0;
            v = 1.482602218505602 * median(Vector((col.array() - center).abs()));
        }
        if (v <= 0.0) {
            const double center = prob.intercept ? col.mean() : 0.0;
            v = std::sqrt((col.array() - center).square().sum() / n);
        }
        s(j) = v > 0.0 ? v : 1.0;
    }
    return s;
}

double lambda_max(const RegressionProblem& prob)
{
    validate(prob);
    const Vector scales = column_scales(prob, false);
    Matrix x = scaled_design(prob.predictors, scales);
    Vector y = prob.response;
    if (prob.intercept) {
        x.rowwise() -= x.colwise().mean();
        y.array() -= y.mean();
    }
    if (x.cols() == 0) return 0.0;
    return (x.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(prob.rows());
}

std::vector<double> lambda_grid(double lmax, int size, double ratio)
{
    std::vector<double> grid;
    if (size <= 0) return grid;
    if (size == 1 || lmax <= 0.0) return {std::max(lmax, 0.0)};
    const double lo = std::log(ratio);
    for (int k = 0; k < size; ++k) grid.push_back(lmax * std::exp(lo * k / (size - 1)));
    return grid;
}

RegressionFit fit_ols(const RegressionProblem& prob)
{
    validate(prob);
    const LinearFit lf = ols_rows(prob.predictors, prob.response, prob.intercept, prob.min_norm_fallback);
    RegressionFit fit = make_fit(FitKind::ols, prob, lf, all_rows(prob.rows()), Vector::Ones(prob.cols()), 0.0);
    return fit;
}

RegressionFit fit_lasso(const RegressionProblem& prob, const RegressionFit* warm)
{
    validate(prob);
    const Vector scales = column_scales(prob, false);
    const Matrix xs = scaled_design(prob.predictors, scales);
    int passes = 0;
    const Subset rows = all_rows(prob.rows());
    Vector start;
    if (warm && warm->coefficients.size() == prob.cols()) start = warm->coefficients.array() * scales.array();
    const LinearFit lf = lasso_rows(xs, prob.response, scales, rows, prob.lambda, prob.intercept,
                                    start.size() ? &start : nullptr, &passes);
    RegressionFit fit = make_fit(FitKind::lasso, prob, lf, rows, scales, prob.lambda);
    fit.iterations = passes;
    fit.converged = passes < kLassoMaxPasses;
    return fit;
}

RegressionFit fit_lts(const RegressionProblem& prob, const SearchOptions& opts)
{
    validate(prob);
    const int d = prob.cols() + (prob.intercept ? 1 : 0);
    const int h = prob.h();
    if (h < d + 1)
        throw InfeasibleTrimError("trim count " + std::to_string(h) + " below " + std::to_string(d + 1) +
                                  " (parameters + 1)");
    if (h == prob.rows()) {
        RegressionFit fit = fit_ols(prob);
        fit.kind = FitKind::lts;
        fit.trace = {fit.objective};
        fit.candidates = {fit.subset};
        return fit;
    }
    const Vector ones = Vector::Ones(prob.cols());
    auto fit_rows = [&](const Subset& rows, const LinearFit*, bool) {
        return ols_rows(take_rows(prob.predictors, rows), take_rows(prob.response, rows), prob.intercept, true);
    };
    return concentrate(prob, opts, std::max(d, 1), ones, FitKind::lts, fit_rows);
}

RegressionFit fit_sparse_lts(const RegressionProblem& prob, const SearchOptions& opts)
{
    validate(prob);
    const int h = prob.h();
    if (h < 2) throw InfeasibleTrimError("sparse LTS needs a trim count of at least 2");
    const Vector scales = column_scales(prob, true);
    const Matrix xs = scaled_design(prob.predictors, scales);
    auto fit_rows = [&](const Subset& rows, const LinearFit* warm, bool cheap) {
        return lasso_rows(xs, prob.response, scales, rows, prob.lambda, prob.intercept,
                          warm ? &warm->scaled : nullptr, nullptr, cheap ? kSearchPasses : kLassoMaxPasses);
    };
    const int start = std::min(3, h);
    return concentrate(prob, opts, start, scales, FitKind::sparse_lts, fit_rows);
}

double lts_consistency_factor(double alpha)
{
    if (alpha >= 1.0) return 1.0;
    const boost::math::normal_distribution<double> z;
    const double q = boost::math::quantile(z, 0.5 * (1.0 + alpha));
    const double tail = 1.0 - 2.0 * q * boost::math::pdf(z, q) / alpha;
    return 1.0 / std::sqrt(tail);
}

double reweight_cutoff()
{
    static const double cutoff = boost::math::quantile(boost::math::normal_distribution<double>(), 0.9875);
    return cutoff;
}

double trimmed_objective(const RegressionFit& fit, int h)
{
    return trimmed_sum(fit.residuals.array().square().matrix(), h) + fit.penalty();
}

RegressionFit reweight(const RegressionFit& fit, const RegressionProblem& prob)
{
    validate(prob);
    const int n = prob.rows();
    const int h = prob.h();
    const Vector sq = fit.residuals.array().square();
    const double raw = std::sqrt(trimmed_sum(sq, h) / h);
    const double scale = raw * lts_consistency_factor(static_cast<double>(h) / n);
    const double limit = reweight_cutoff() * scale;

    Subset keep;
    for (int i = 0; i < n; ++i)
        if (std::abs(fit.residuals(i)) <= limit) keep.push_back(i);

    const int params = fit.nonzeros() + (prob.intercept ? 1 : 0);
    if (static_cast<int>(keep.size()) < params + 1) {
        RegressionFit out = fit;
        out.reweight_fallback = true;
        out.residual_scale = scale;
        return out;
    }

    const bool penalized = fit.kind == FitKind::lasso || fit.kind == FitKind::sparse_lts;
    RegressionFit out;
    if (penalized) {
        const Vector& scales = fit.penalty_scales;
        const Matrix xs = scaled_design(prob.predictors, scales);
        const Vector warm = fit.coefficients.array() * scales.array();
        const LinearFit lf = lasso_rows(xs, prob.response, scales, keep, fit.lambda, prob.intercept, &warm);
        out = make_fit(fit.kind, prob, lf, keep, scales, fit.lambda);
    } else {
        const LinearFit lf = ols_rows(take_rows(prob.predictors, keep), take_rows(prob.response, keep),
                                      prob.intercept, true);
        out = make_fit(fit.kind, prob, lf, keep, Vector::Ones(prob.cols()), 0.0);
    }
    out.reweighted = true;
    out.residual_scale = scale;
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.trace = fit.trace;
    out.candidates = fit.candidates;
    return out;
}

}  // namespace rscca
