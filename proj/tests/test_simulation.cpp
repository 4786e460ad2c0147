#include <doctest.h>

#include "oracles.hpp"
#include "rscca/errors.hpp"
#include "rscca/evaluation.hpp"
#include "rscca/simulation.hpp"

using namespace rscca;

TEST_CASE("builtin designs")
{
    const SimulationDesign a = builtin_design("sparse-low");
    CHECK(a.n == 100);
    CHECK(a.p == 6);
    CHECK(a.q == 4);
    CHECK(a.sigma_xy()(0, 0) == 0.9);
    CHECK(a.sigma_xy().cwiseAbs().sum() == doctest::Approx(0.9));

    const SimulationDesign b = builtin_design("nonsparse-low");
    CHECK(b.n == 250);
    CHECK(b.p == 12);
    CHECK(b.q == 8);
    CHECK(b.sigma_xy()(0, 0) == 0.2);
    CHECK(b.sigma_xy()(11, 7) == 0.1);
    CHECK(b.sigma_xy()(0, 7) == 0.1);

    const SimulationDesign c = builtin_design("sparse-high");
    CHECK(c.n == 100);
    CHECK(c.p == 100);
    CHECK(c.q == 4);
    CHECK(c.sigma_xy().topLeftCorner(2, 2).isApprox(Matrix::Constant(2, 2, 0.45)));
    CHECK(c.sigma_xy().cwiseAbs().sum() == doctest::Approx(4 * 0.45));

    for (const auto& name : builtin_design_names()) {
        const SimulationDesign d = builtin_design(name);
        CHECK(d.sigma.isApprox(d.sigma.transpose()));
        CHECK(Eigen::LLT<Matrix>(d.sigma).info() == Eigen::Success);
        CHECK(d.sigma.topLeftCorner(d.p, d.p).isIdentity());
        CHECK(d.sigma.bottomRightCorner(d.q, d.q).isIdentity());
    }
    CHECK_THROWS_AS(builtin_design("dense-huge"), InputError);
}

TEST_CASE("true canonical vectors")
{
    const TrueVectors s = true_vectors(builtin_design("sparse-low"));
    CHECK(s.a.cols() == 1);
    CHECK(s.a.col(0).isApprox(Vector::Unit(6, 0)));
    CHECK(s.b.col(0).isApprox(Vector::Unit(4, 0)));
    CHECK(s.correlations(0) == doctest::Approx(0.9));

    const TrueVectors h = true_vectors(builtin_design("sparse-high"));
    CHECK(h.a(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(h.a(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(h.a.col(0).tail(98).isZero(0.0));
    CHECK(h.b.col(0).tail(2).isZero(0.0));

    // dense pairs: compare against an SVD of the cross block computed here
    const SimulationDesign d = builtin_design("nonsparse-low");
    const TrueVectors n = true_vectors(d);
    CHECK(n.a.cols() == 2);
    const Eigen::JacobiSVD<Matrix> svd(d.sigma_xy(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    CHECK(subspace_angle(n.a, svd.matrixU().leftCols(2)).angle < 1e-10);
    CHECK(subspace_angle(n.b, svd.matrixV().leftCols(2)).angle < 1e-10);
    CHECK(n.correlations(0) == doctest::Approx(svd.singularValues()(0)));
    CHECK(n.correlations(1) == doctest::Approx(svd.singularValues()(1)));
    CHECK(count_nonzero(n.a.col(0)) == 12);
}

TEST_CASE("contamination counts and values")
{
    const SimulationDesign d = builtin_design("sparse-low");
    CHECK(contaminated_rows(100) == 10);
    CHECK(contaminated_rows(46) == 5);
    CHECK(contaminated_rows(250) == 25);

    const Dataset clean = generate(d, Scheme::none, 5);
    CHECK(clean.outliers == 0);

    const Dataset asym = generate(d, Scheme::asymmetric, 5);
    CHECK(asym.outliers == 10);
    CHECK(asym.x.bottomRows(10).isConstant(10.0));
    CHECK(asym.y.bottomRows(10).isConstant(10.0));
    // the clean rows are the same draws as the uncontaminated data
    CHECK(asym.x.topRows(90) == clean.x.topRows(90));

    const Dataset sym = generate(d, Scheme::symmetric, 5);
    CHECK(sym.outliers == 10);
    CHECK(sym.x.topRows(90) == clean.x.topRows(90));
    CHECK(sym.x.bottomRows(10).isApprox(3.0 * clean.x.bottomRows(10)));

    const Dataset high = generate(builtin_design("sparse-high"), Scheme::asymmetric, 1);
    CHECK(high.x.bottomRows(10).isConstant(104.0));
}

TEST_CASE("generation is seeded and has the design covariance")
{
    const SimulationDesign d = builtin_design("sparse-low");
    const Dataset a = generate(d, Scheme::symmetric, 77);
    const Dataset b = generate(d, Scheme::symmetric, 77);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(generate(d, Scheme::symmetric, 78).x != a.x);

    SimulationDesign big = d;
    big.n = 5000;
    const Dataset z = generate(big, Scheme::none, 3);
    Matrix joint(5000, 10);
    joint << z.x, z.y;
    CHECK((oracle::covariance(joint) - d.sigma).norm() < 0.2);

    MethodConfig cfg;
    cfg.variant = Variant::classical;
    const CcaFit fit = fit_cca(z.x, z.y, cfg, 1);
    CHECK(std::abs(std::abs(fit.correlations(0)) - 0.9) < 0.05);
}

TEST_CASE("study records and summary")
{
    const SimulationDesign d = builtin_design("sparse-low");
    const std::vector<Variant> methods{Variant::classical, Variant::sparse};
    const StudyResult one = run_study(d, Scheme::none, methods, 1, 9);
    CHECK(one.records.size() == 2u);

    const StudyResult s = run_study(d, Scheme::asymmetric, methods, 6, 9);
    CHECK(s.records.size() == 12u);
    for (const auto& r : s.records) CHECK_FALSE(r.failed);
    // summaries recompute from the records alone
    const auto again = summarize(s.design, s.scheme, methods, s.records);
    REQUIRE(again.size() == s.summary.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].median == s.summary[i].median);
        CHECK(again[i].mean == s.summary[i].mean);
    }
    std::vector<double> angles;
    for (const auto& r : s.records)
        if (r.method == "classical") angles.push_back(r.angle_a);
    CHECK(s.summary.front().metric == "angle_A");
    CHECK(s.summary.front().median == summarize_runs(angles).median);

    // threads do not change results
    StudyOptions par;
    par.threads = 3;
    const StudyResult t = run_study(d, Scheme::asymmetric, methods, 6, 9, par);
    for (std::size_t i = 0; i < s.records.size(); ++i) CHECK(t.records[i].angle_a == s.records[i].angle_a);
}

TEST_CASE("study refuses non-sparse methods in high dimension")
{
    CHECK_THROWS_AS(run_study(builtin_design("sparse-high"), Scheme::none, {Variant::classical}, 1, 1),
                    UnsupportedConfigError);
    StudyOptions opts;
    opts.rank = 2;
    CHECK_THROWS_AS(run_study(builtin_design("sparse-low"), Scheme::none, {Variant::classical}, 1, 1, opts),
                    InputError);
}
