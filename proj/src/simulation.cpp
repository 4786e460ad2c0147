#include "rscca/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "rscca/errors.hpp"
#include "rscca/evaluation.hpp"

namespace rscca {

namespace {

SimulationDesign make_design(std::string name, int n, int p, int q, const Matrix& sxy, int rank)
{
    SimulationDesign d;
    d.name = std::move(name);
    d.n = n;
    d.p = p;
    d.q = q;
    d.sigma = Matrix::Identity(p + q, p + q);
    d.sigma.topRightCorner(p, q) = sxy;
    d.sigma.bottomLeftCorner(q, p) = sxy.transpose();
    d.true_rank = rank;
    return d;
}

// Inverse square root of a symmetric positive definite matrix.
Matrix inv_sqrt(const Matrix& s)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           eig.eigenvectors().transpose();
}

}  // namespace

std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::none: return "none";
    case Scheme::symmetric: return "symmetric";
    case Scheme::asymmetric: return "asymmetric";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name)
{
    if (name == "none" || name == "clean") return Scheme::none;
    if (name == "symmetric") return Scheme::symmetric;
    if (name == "asymmetric") return Scheme::asymmetric;
    throw InputError("unknown contamination scheme '" + std::string(name) + "'");
}

std::vector<std::string> builtin_design_names() { return {"sparse-low", "nonsparse-low", "sparse-high"}; }

SimulationDesign builtin_design(std::string_view name)
{
    if (name == "sparse-low") {
        Matrix sxy = Matrix::Zero(6, 4);
        sxy(0, 0) = 0.9;
        return make_design("sparse-low", 100, 6, 4, sxy, 1);
    }
    if (name == "nonsparse-low") {
        Matrix sxy = Matrix::Constant(12, 8, 0.1);
        sxy(0, 0) = 0.2;
        return make_design("nonsparse-low", 250, 12, 8, sxy, 2);
    }
    if (name == "sparse-high") {
        Matrix sxy = Matrix::Zero(100, 4);
        sxy.topLeftCorner(2, 2).setConstant(0.45);
        return make_design("sparse-high", 100, 100, 4, sxy, 1);
    }
    throw InputError("unknown design '" + std::string(name) + "'");
}

void validate_design(const SimulationDesign& d)
{
    if (d.n < 4 || d.p < 1 || d.q < 1) throw InputError("design needs n >= 4, p >= 1, q >= 1");
    if (d.sigma.rows() != d.p + d.q || d.sigma.cols() != d.p + d.q)
        throw InputError("design covariance must be (p + q) x (p + q)");
    if (!d.sigma.isApprox(d.sigma.transpose(), 1e-12)) throw InputError("design covariance is not symmetric");
    const Eigen::LLT<Matrix> llt(d.sigma);
    if (llt.info() != Eigen::Success) throw InputError("design covariance is not positive definite");
    if (d.true_rank < 1 || d.true_rank > std::min(d.p, d.q)) throw InputError("design rank out of range");
}

int contaminated_rows(int n) { return n - static_cast<int>(std::floor(0.9 * n)); }

Dataset generate(const SimulationDesign& design, Scheme scheme, std::uint64_t seed)
{
    validate_design(design);
    const int n = design.n;
    const int dim = design.p + design.q;
    const Matrix chol = Eigen::LLT<Matrix>(design.sigma).matrixL();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const int bad = scheme == Scheme::none ? 0 : contaminated_rows(n);
    Matrix z(n, dim);
    for (int i = 0; i < n; ++i) {
        Vector g(dim);
        for (int j = 0; j < dim; ++j) g(j) = gauss(rng);
        z.row(i) = (chol * g).transpose();
    }
    if (scheme == Scheme::symmetric) {
        // N(0, 9 sigma)
        z.bottomRows(bad) *= 3.0;
    } else if (scheme == Scheme::asymmetric) {
        z.bottomRows(bad).setConstant(design.sigma.trace());
    }
    Dataset out;
    out.x = z.leftCols(design.p);
    out.y = z.rightCols(design.q);
    out.outliers = bad;
    return out;
}

TrueVectors true_vectors(const SimulationDesign& design)
{
    validate_design(design);
    const int p = design.p;
    const int q = design.q;
    const int r = design.true_rank;
    const Matrix wx = inv_sqrt(design.sigma.topLeftCorner(p, p));
    const Matrix wy = inv_sqrt(design.sigma.bottomRightCorner(q, q));
    const Eigen::JacobiSVD<Matrix> svd(wx * design.sigma_xy() * wy, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TrueVectors out;
    out.a = wx * svd.matrixU().leftCols(r);
    out.b = wy * svd.matrixV().leftCols(r);
    for (int k = 0; k < r; ++k) {
        out.a.col(k).normalize();
        out.b.col(k).normalize();
        // exact zeros where the population vector vanishes
        for (Index i = 0; i < out.a.rows(); ++i)
            if (std::abs(out.a(i, k)) < 1e-12) out.a(i, k) = 0.0;
        for (Index i = 0; i < out.b.rows(); ++i)
            if (std::abs(out.b(i, k)) < 1e-12) out.b(i, k) = 0.0;
        Vector ak = out.a.col(k);
        fix_sign(ak);
        out.a.col(k) = ak;
        Vector bk = out.b.col(k);
        fix_sign(bk);
        out.b.col(k) = bk;
    }
    out.correlations = svd.singularValues().head(r);
    return out;
}

std::vector<SummaryRow> summarize(const std::string& design, const std::string& scheme,
                                  const std::vector<Variant>& methods, const std::vector<RunRecord>& records)
{
    using Getter = std::function<std::optional<double>(const RunRecord&)>;
    const std::vector<std::pair<std::string, Getter>> metrics = {
        {"angle_A", [](const RunRecord& r) { return std::optional<double>(r.angle_a); }},
        {"angle_B", [](const RunRecord& r) { return std::optional<double>(r.angle_b); }},
        {"tpr_A", [](const RunRecord& r) { return r.tpr_a; }},
        {"tnr_A", [](const RunRecord& r) { return r.tnr_a; }},
        {"tpr_B", [](const RunRecord& r) { return r.tpr_b; }},
        {"tnr_B", [](const RunRecord& r) { return r.tnr_b; }},
    };
    std::vector<SummaryRow> rows;
    for (Variant m : methods) {
        const std::string name = to_string(m);
        int total = 0;
        int failures = 0;
        for (const auto& rec : records) {
            if (rec.method != name) continue;
            ++total;
            if (rec.failed) ++failures;
        }
        for (const auto& [metric, get] : metrics) {
            std::vector<double> vals;
            for (const auto& rec : records) {
                if (rec.method != name || rec.failed) continue;
                if (auto v = get(rec)) vals.push_back(*v);
            }
            if (vals.empty()) continue;
            const RunSummary s = summarize_runs(vals);
            rows.push_back({design, scheme, name, metric, s.median, s.mean, total, failures});
        }
    }
    return rows;
}

StudyResult run_study(const SimulationDesign& design, Scheme scheme, const std::vector<Variant>& methods, int runs,
                      std::uint64_t seed, const StudyOptions& opts)
{
    validate_design(design);
    if (runs < 1) throw InputError("number of runs must be at least 1");
    if (methods.empty()) throw InputError("no methods requested");
    for (Variant m : methods) {
        if (!is_sparse(m) && std::max(design.p, design.q) >= design.n)
            throw UnsupportedConfigError("method '" + to_string(m) + "' cannot be computed on design '" + design.name +
                                         "': max(p, q) >= n; only sparse and robust-sparse apply");
    }
    opts.base.validate();
    const TrueVectors truth = true_vectors(design);
    const int rank = opts.rank.value_or(design.true_rank);
    if (rank < 1 || rank > design.true_rank)
        throw InputError("scored rank " + std::to_string(rank) + " outside 1.." + std::to_string(design.true_rank) +
                         " for design '" + design.name + "'");

    StudyResult out;
    out.design = design.name;
    out.scheme = to_string(scheme);
    out.runs = runs;
    out.seed = seed;
    const std::size_t per_run = methods.size();
    out.records.resize(static_cast<std::size_t>(runs) * per_run);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int m = next++; m < runs; m = next++) {
            const std::uint64_t run_seed = mix_seed(seed, static_cast<std::uint64_t>(m));
            const Dataset data = generate(design, scheme, run_seed);
            for (std::size_t k = 0; k < per_run; ++k) {
                RunRecord& rec = out.records[static_cast<std::size_t>(m) * per_run + k];
                rec.method = to_string(methods[k]);
                rec.run = m;
                rec.seed = mix_seed(run_seed, 100 + k);
                MethodConfig cfg = opts.base;
                cfg.variant = methods[k];
                cfg.seed = rec.seed;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const CcaFit fit = fit_cca(data.x, data.y, cfg, rank);
                    const Matrix ta = truth.a.leftCols(rank);
                    const Matrix tb = truth.b.leftCols(rank);
                    rec.angle_a = subspace_angle(fit.a, ta).angle;
                    rec.angle_b = subspace_angle(fit.b, tb).angle;
                    const SparsityReport sa = sparsity_rates(fit.a, ta);
                    const SparsityReport sb = sparsity_rates(fit.b, tb);
                    rec.tpr_a = sa.tpr;
                    rec.tnr_a = sa.tnr;
                    rec.tpr_b = sb.tpr;
                    rec.tnr_b = sb.tnr;
                    rec.converged = std::all_of(fit.logs.begin(), fit.logs.end(),
                                                [](const PairLog& l) { return l.converged; });
                } catch (const Error& e) {
                    rec.failed = true;
                    rec.error = e.what();
                }
                rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        }
    };
    const int threads = std::max(1, std::min(opts.threads, runs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    out.summary = summarize(out.design, out.scheme, methods, out.records);
    return out;
}

}  // namespace rscca
