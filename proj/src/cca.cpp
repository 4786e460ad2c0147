#include "rscca/cca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rscca/errors.hpp"
#include "rscca/robust.hpp"

namespace rscca {

namespace {

enum Side { side_a = 0, side_b = 1 };  // a: predictors X, b: predictors Y

// seed streams
constexpr std::uint64_t kInitStream = 500;
constexpr std::uint64_t kPairStream = 1000;
constexpr std::uint64_t kDeflateStream = 2000;
constexpr std::uint64_t kExpressStream = 3000;
constexpr std::uint64_t kCorrStream = 4000;

bool trimmed(const MethodConfig& cfg) { return is_robust(cfg.variant) && cfg.trim > 0.0; }

int trim_count(const MethodConfig& cfg, int n)
{
    if (!trimmed(cfg)) return n;
    return std::max(2, static_cast<int>(std::floor((1.0 - cfg.trim) * n)));
}

// One regression role inside an alternation; keeps warm-start state between calls.
class Regressor {
public:
    Regressor(const MethodConfig& cfg, int pair_index) : cfg_(cfg), pair_(pair_index) {}

    RegressionFit run(const Matrix& pred, const Vector& resp, Side side, bool penalize, std::uint64_t seed)
    {
        const int n = static_cast<int>(pred.rows());
        const int d = static_cast<int>(pred.cols());
        RegressionProblem prob;
        prob.predictors = pred;
        prob.response = resp;
        prob.min_norm_fallback = true;
        const int h = trim_count(cfg_, n);
        if (h < n) prob.trim_count = h;

        if (penalize && is_sparse(cfg_.variant)) {
            std::vector<double> grid;
            if (pair_ < static_cast<int>(cfg_.pair_lambdas.size()))
                grid = {cfg_.pair_lambdas[static_cast<std::size_t>(pair_)][side]};
            else if (!cfg_.lambda_grid.empty())
                grid = cfg_.lambda_grid;
            else
                grid = lambda_grid(lambda_max(prob), cfg_.lambda_grid_size, cfg_.lambda_ratio);
            LambdaChoice choice = select_lambda(prob, grid, cfg_, &cache_[side], true, seed);
            last_lambda_[side] = choice.lambda;
            return std::move(choice.fit);
        }
        last_lambda_[side] = 0.0;
        if (h == n) return fit_ols(prob);
        if (h < d + 1)
            throw InfeasibleTrimError("trimmed regression keeps " + std::to_string(h) + " of " + std::to_string(n) +
                                      " rows but has " + std::to_string(d) + " predictors");
        SearchOptions opts = cfg_.search;
        opts.seed = seed;
        if (!warm_[side].empty()) {
            opts.warm_starts = {warm_[side]};
            opts.n_starts = cfg_.warm_random_starts;
        }
        const RegressionFit raw = fit_lts(prob, opts);
        warm_[side] = raw.subset;
        return reweight(raw, prob);
    }

    double last_lambda(Side side) const { return last_lambda_[side]; }

private:
    const MethodConfig& cfg_;
    int pair_;
    LambdaCache cache_[2];
    Subset warm_[2];
    double last_lambda_[2] = {0.0, 0.0};
};

Vector unit(const Vector& coef, const char* what)
{
    const double nrm = coef.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw DegenerateDataError(std::string("degenerate data: ") + what + " regression returned a zero vector");
    return coef / nrm;
}

Vector initial_for_pair(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int pair)
{
    const std::uint64_t seed = mix_seed(cfg.seed, kInitStream + static_cast<std::uint64_t>(pair));
    const Vector dir = is_robust(cfg.variant) ? robust_first_pc(y, seed) : classical_first_pc(y);
    const Vector z = y * dir;
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    const bool penalize = is_sparse(cfg.variant) && (p >= n || (trimmed(cfg) && p + 1 > trim_count(cfg, n)));
    Regressor reg(cfg, pair);
    const RegressionFit fit = reg.run(x, z, side_a, penalize, mix_seed(seed, 1));
    return unit(fit.coefficients, "initial");
}

PairEstimate alternate(const Matrix& x, const Matrix& y, const MethodConfig& cfg, int pair)
{
    Vector a = initial_for_pair(x, y, cfg, pair);
    Vector b;
    const bool penalize = is_sparse(cfg.variant);
    const std::uint64_t base = mix_seed(cfg.seed, kPairStream + static_cast<std::uint64_t>(pair));
    Regressor reg(cfg, pair);

    PairEstimate out;
    PairLog& log = out.log;
    double best_obj = std::numeric_limits<double>::infinity();
    Vector best_a, best_b;
    for (int t = 1; t <= cfg.max_alternations; ++t) {
        const auto step = static_cast<std::uint64_t>(t);
        const RegressionFit fb = reg.run(y, x * a, side_b, penalize, mix_seed(base, 2 * step));
        const Vector b_new = unit(fb.coefficients, "canonical vector B");
        const RegressionFit fa = reg.run(x, y * b_new, side_a, penalize, mix_seed(base, 2 * step + 1));
        const Vector a_new = unit(fa.coefficients, "canonical vector A");

        log.angle_a = line_angle(a, a_new);
        log.angle_b = b.size() ? line_angle(b, b_new) : std::numbers::pi / 2;
        a = a_new;
        b = b_new;
        log.iterations = t;
        log.reweighted = fa.reweighted || fb.reweighted;
        log.regression_objective.push_back(fa.objective);
        log.pair_objective.push_back(2.0 * (1.0 - pearson(x * a, y * b)));
        if (fa.objective < best_obj) {
            best_obj = fa.objective;
            best_a = a;
            best_b = b;
        }
        if (log.angle_a < cfg.tolerance && log.angle_b < cfg.tolerance) {
            log.converged = true;
            break;
        }
    }
    log.lambda_a = reg.last_lambda(side_a);
    log.lambda_b = reg.last_lambda(side_b);
    if (!log.converged) {
        a = best_a;
        b = best_b;
    }
    out.a = a;
    out.b = b;
    return out;
}

void check_data(const Matrix& x, const Matrix& y)
{
    if (x.rows() != y.rows())
        throw InputError("X has " + std::to_string(x.rows()) + " rows but Y has " + std::to_string(y.rows()));
    if (x.cols() < 1 || y.cols() < 1) throw InputError("X and Y need at least one column each");
    if (x.rows() < 4) throw InputError("CCA needs at least 4 observations");
    if (!x.allFinite() || !y.allFinite()) throw InputError("CCA input contains non-finite values");
}

}  // namespace

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::classical: return "classical";
    case Variant::robust: return "robust";
    case Variant::sparse: return "sparse";
    case Variant::robust_sparse: return "robust-sparse";
    }
    return "unknown";
}

Variant parse_variant(std::string_view name)
{
    if (name == "classical" || name == "cca") return Variant::classical;
    if (name == "robust") return Variant::robust;
    if (name == "sparse") return Variant::sparse;
    if (name == "robust-sparse" || name == "robust_sparse") return Variant::robust_sparse;
    throw InputError("unknown method '" + std::string(name) + "'");
}

bool is_robust(Variant v) { return v == Variant::robust || v == Variant::robust_sparse; }
bool is_sparse(Variant v) { return v == Variant::sparse || v == Variant::robust_sparse; }

void MethodConfig::validate() const
{
    if (!(tolerance > 0.0)) throw InputError("tolerance must be positive");
    if (!(trim >= 0.0 && trim <= 0.5)) throw InputError("trim fraction must be in [0, 0.5]");
    if (max_alternations < 1) throw InputError("max alternations must be at least 1");
    if (lambda_grid_size < 1) throw InputError("lambda grid size must be at least 1");
    if (!(lambda_ratio > 0.0 && lambda_ratio <= 1.0)) throw InputError("lambda ratio must be in (0, 1]");
    for (double l : lambda_grid)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("lambda values must be finite and >= 0");
    for (const auto& pl : pair_lambdas)
        if (!(pl[0] >= 0.0 && pl[1] >= 0.0)) throw InputError("fixed lambdas must be >= 0");
    if (search.n_starts < 1 || mcd_starts < 1) throw InputError("random start counts must be at least 1");
    if (warm_random_starts < 0) throw InputError("warm random starts must be >= 0");
}

double bic_score(const RegressionFit& fit, const RegressionProblem& prob)
{
    const int n = prob.rows();
    const int k = fit.nonzeros();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Index> active;
    for (Index j = 0; j < fit.coefficients.size(); ++j)
        if (fit.coefficients(j) != 0.0) active.push_back(j);
    const Index extra = prob.intercept ? 1 : 0;
    const auto width = static_cast<Index>(active.size()) + extra;

    // least squares on the active columns over the given rows; residuals for all rows
    auto refit = [&](const Subset& rows, Vector& resid) {
        if (static_cast<Index>(rows.size()) <= width) return false;
        resid = prob.response;
        if (width == 0) return true;
        Matrix design(n, width);
        if (extra) design.col(0).setOnes();
        for (std::size_t j = 0; j < active.size(); ++j)
            design.col(static_cast<Index>(j) + extra) = prob.predictors.col(active[j]);
        const Matrix sub = take_rows(design, rows);
        const Vector coef = sub.colPivHouseholderQr().solve(take_rows(prob.response, rows));
        resid -= design * coef;
        return true;
    };

    Subset rows = fit.subset;
    Vector resid;
    if (!refit(rows, resid)) return inf;
    if (prob.h() < n) {
        // fit.subset is the trimmed subset of a raw fit: reweight the refit
        double trimmed_ss = 0.0;
        for (int i : rows) trimmed_ss += resid(i) * resid(i);
        const double h = static_cast<double>(rows.size());
        // the raw refit overfits its own subset once the support nears h/2
        if (2 * k > h) return inf;
        const double scale = std::sqrt(trimmed_ss / (h - width)) * lts_consistency_factor(h / n);
        if (!(scale > 0.0)) return inf;
        rows.clear();
        for (int i = 0; i < n; ++i)
            if (std::abs(resid(i)) <= reweight_cutoff() * scale) rows.push_back(i);
        if (!refit(rows, resid)) return inf;
    }
    const auto nw = static_cast<double>(rows.size());
    if (!(nw > k + 1) || 2 * k > nw) return inf;
    double rss = 0.0;
    for (int i : rows) rss += resid(i) * resid(i);
    if (!(rss > 0.0)) return inf;

    const double c = lts_consistency_factor(nw / n);
    const double scale_sq = rss / (nw - static_cast<double>(width)) * c * c;
    const double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi) + std::log(scale_sq) + 1.0);
    return -2.0 * loglik + k * std::log(static_cast<double>(n));
}

LambdaChoice select_lambda(const RegressionProblem& tmpl, const std::vector<double>& grid, const MethodConfig& cfg,
                           LambdaCache* cache, bool require_nonzero, std::uint64_t seed)
{
    if (grid.empty()) throw InputError("lambda grid is empty");
    const bool robust = cfg.variant == Variant::robust_sparse && tmpl.h() < tmpl.rows();

    LambdaChoice out;
    out.grid = grid;
    std::vector<RegressionFit> fits;
    fits.reserve(grid.size());
    std::vector<Subset> next_cache(grid.size());
    Subset prev;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        RegressionProblem prob = tmpl;
        prob.lambda = grid[k];
        if (robust) {
            SearchOptions opts = cfg.search;
            opts.seed = mix_seed(seed, k);
            if (cache && k < cache->subsets.size() && !cache->subsets[k].empty())
                opts.warm_starts.push_back(cache->subsets[k]);
            if (!prev.empty()) opts.warm_starts.push_back(prev);
            if (!opts.warm_starts.empty()) opts.n_starts = cfg.warm_random_starts;
            const RegressionFit raw = fit_sparse_lts(prob, opts);
            prev = raw.subset;
            next_cache[k] = raw.subset;
            fits.push_back(reweight(raw, prob));
            // score the reported support, starting from the raw trimmed subset
            RegressionFit scored = fits.back();
            scored.subset = raw.subset;
            out.bic.push_back(bic_score(scored, prob));
        } else {
            fits.push_back(fit_lasso(prob, fits.empty() ? nullptr : &fits.back()));
            out.bic.push_back(bic_score(fits.back(), prob));
        }
        out.nonzeros.push_back(fits.back().nonzeros());
        // the rest of the path is too dense to score
        if (2 * fits.back().nonzeros() > static_cast<int>(fits.back().subset.size())) break;
    }
    if (cache && robust) cache->subsets = std::move(next_cache);

    int best = -1;
    for (std::size_t k = 0; k < fits.size(); ++k) {
        if (require_nonzero && out.nonzeros[k] == 0) continue;
        if (!std::isfinite(out.bic[k])) continue;
        // refit scores tie along a constant active set; ties go to the smaller lambda
        if (best < 0) {
            best = static_cast<int>(k);
            continue;
        }
        const double cur = out.bic[static_cast<std::size_t>(best)];
        if (out.bic[k] <= cur + 1e-9 * std::abs(cur)) best = static_cast<int>(k);
    }
    if (best < 0) {
        for (std::size_t k = 0; k < fits.size() && best < 0; ++k)
            if (!require_nonzero || out.nonzeros[k] > 0) best = static_cast<int>(k);
    }
    if (best < 0) best = static_cast<int>(fits.size()) - 1;
    out.index = best;
    out.lambda = grid[static_cast<std::size_t>(best)];
    out.fit = std::move(fits[static_cast<std::size_t>(best)]);
    return out;
}

Vector initial_direction(const Matrix& x, const Matrix& y, const MethodConfig& cfg)
{
    check_data(x, y);
    return initial_for_pair(x, y, cfg, 0);
}

PairEstimate fit_first_pair(const Matrix& x, const Matrix& y, const MethodConfig& cfg)
{
    check_data(x, y);
    cfg.validate();
    PairEstimate est = alternate(x, y, cfg, 0);
    fix_sign(est.a);
    fix_sign(est.b);
    return est;
}

Matrix deflate(const Matrix& m, const Matrix& variates, const MethodConfig& cfg)
{
    if (m.rows() != variates.rows()) throw InputError("deflate: row mismatch");
    if (variates.cols() < 1) throw InputError("deflate needs at least one variate");
    MethodConfig plain = cfg;
    plain.variant = is_robust(cfg.variant) ? Variant::robust : Variant::classical;
    Matrix out(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        Regressor reg(plain, 0);
        const RegressionFit fit =
            reg.run(variates, m.col(j), side_a, false, mix_seed(cfg.seed, kDeflateStream + static_cast<std::uint64_t>(j)));
        out.col(j) = fit.residuals;
        // a column spanned by the variates deflates to roundoff, which standardizing would inflate
        if (out.col(j).norm() <= 1e-10 * m.col(j).norm()) out.col(j).setZero();
    }
    return out;
}

PairEstimate fit_higher_pair(const Matrix& x_deflated, const Matrix& y_deflated, const Matrix& x, const Matrix& y,
                             const MethodConfig& cfg, int pair_index)
{
    check_data(x_deflated, y_deflated);
    check_data(x, y);
    PairEstimate star = alternate(x_deflated, y_deflated, cfg, pair_index);
    const Vector u_star = x_deflated * star.a;
    const Vector v_star = y_deflated * star.b;

    const std::uint64_t seed = mix_seed(cfg.seed, kExpressStream + static_cast<std::uint64_t>(pair_index));
    Regressor reg(cfg, pair_index);
    const bool penalize = is_sparse(cfg.variant);
    PairEstimate out;
    out.log = star.log;
    out.a = unit(reg.run(x, u_star, side_a, penalize, mix_seed(seed, 0)).coefficients, "re-expressed A");
    out.b = unit(reg.run(y, v_star, side_b, penalize, mix_seed(seed, 1)).coefficients, "re-expressed B");
    fix_sign(out.a);
    fix_sign(out.b);
    return out;
}

int rank_from_correlations(const std::vector<double>& rho)
{
    if (rho.size() <= 1) return 1;
    int best = 0;
    double best_ratio = -1.0;
    for (std::size_t j = 0; j + 1 < rho.size(); ++j) {
        const double num = std::abs(rho[j]);
        const double den = std::abs(rho[j + 1]);
        const double ratio = den == 0.0 ? std::numeric_limits<double>::infinity() : num / den;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = static_cast<int>(j);
        }
    }
    return best + 1;
}

int select_rank(const Matrix& x, const Matrix& y, const MethodConfig& cfg)
{
    const int rmax = static_cast<int>(std::min(x.cols(), y.cols()));
    if (rmax <= 1) return 1;
    const CcaFit fit = fit_cca(x, y, cfg, rmax);
    return rank_from_correlations(std::vector<double>(fit.correlations.begin(), fit.correlations.end()));
}

CcaFit fit_cca(const Matrix& x, const Matrix& y, const MethodConfig& cfg, std::optional<int> r)
{
    check_data(x, y);
    cfg.validate();
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    const int q = static_cast<int>(y.cols());
    const int rmax = std::min(p, q);
    if (!is_sparse(cfg.variant) && std::max(p, q) >= n)
        throw UnsupportedConfigError("method '" + to_string(cfg.variant) + "' requires max(p, q) < n (p = " +
                                     std::to_string(p) + ", q = " + std::to_string(q) + ", n = " +
                                     std::to_string(n) + "); use a sparse method");
    if (r && (*r < 1 || *r > rmax))
        throw InputError("number of canonical pairs " + std::to_string(*r) + " outside [1, " + std::to_string(rmax) +
                         "]");

    CcaFit fit;
    fit.config = cfg;
    const bool median_center = trimmed(cfg);
    fit.x_center = median_center ? column_medians(x) : Vector(x.colwise().mean());
    fit.y_center = median_center ? column_medians(y) : Vector(y.colwise().mean());
    const Matrix xc = x.rowwise() - fit.x_center.transpose();
    const Matrix yc = y.rowwise() - fit.y_center.transpose();

    const int pairs = r ? *r : rmax;
    fit.a.resize(p, pairs);
    fit.b.resize(q, pairs);
    fit.u.resize(n, pairs);
    fit.v.resize(n, pairs);
    fit.correlations.resize(pairs);
    for (int k = 0; k < pairs; ++k) {
        PairEstimate est;
        if (k == 0) {
            est = alternate(xc, yc, cfg, 0);
            fix_sign(est.a);
            fix_sign(est.b);
        } else {
            const Matrix xs = deflate(xc, fit.u.leftCols(k), cfg);
            const Matrix ys = deflate(yc, fit.v.leftCols(k), cfg);
            est = fit_higher_pair(xs, ys, xc, yc, cfg, k);
        }
        fit.a.col(k) = est.a;
        fit.b.col(k) = est.b;
        fit.u.col(k) = xc * est.a;
        fit.v.col(k) = yc * est.b;
        fit.correlations(k) = is_robust(cfg.variant)
                                  ? robust_correlation(fit.u.col(k), fit.v.col(k),
                                                       mix_seed(cfg.seed, kCorrStream + static_cast<std::uint64_t>(k)), cfg.mcd_starts)
                                  : pearson(fit.u.col(k), fit.v.col(k));
        fit.logs.push_back(std::move(est.log));
    }
    fit.rank = pairs;
    if (!r) {
        fit.all_correlations.assign(fit.correlations.begin(), fit.correlations.end());
        const int chosen = rank_from_correlations(fit.all_correlations);
        fit.rank = chosen;
        fit.rank_selected = true;
        fit.a.conservativeResize(Eigen::NoChange, chosen);
        fit.b.conservativeResize(Eigen::NoChange, chosen);
        fit.u.conservativeResize(Eigen::NoChange, chosen);
        fit.v.conservativeResize(Eigen::NoChange, chosen);
        fit.correlations.conservativeResize(chosen);
        fit.logs.resize(static_cast<std::size_t>(chosen));
    }
    return fit;
}

}  // namespace rscca
