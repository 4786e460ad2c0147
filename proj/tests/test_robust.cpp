#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rscca/errors.hpp"
#include "rscca/robust.hpp"

using namespace rscca;

TEST_CASE("bivariate mcd equals exhaustive enumeration")
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> nd(6, 12);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = nd(rng);
        Matrix x = oracle::gaussian(n, 2, rng);
        x.col(1) += 0.6 * x.col(0);
        x.row(0) << 8.0, -6.0;
        const McdResult r = mcd_bivariate(x);
        const int h = (3 * n) / 4;
        CHECK(static_cast<int>(r.subset.size()) == h);
        CHECK(r.determinant == doctest::Approx(oracle::mcd_exhaustive(x, h)).epsilon(1e-8));
    }
}

TEST_CASE("mcd result invariants and monotone C-steps")
{
    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix x = oracle::gaussian(100, 2 + rep % 3, rng);
        for (int i = 0; i < 10; ++i) x.row(i).setConstant(15.0);
        const McdResult r = mcd(x, 75);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] * (1.0 + 1e-12));
        CHECK((r.covariance - r.covariance.transpose()).norm() < 1e-14);
        CHECK(r.covariance.determinant() > 0.0);
        CHECK(r.determinant == doctest::Approx(oracle::covariance(oracle::rows_of(x, r.subset)).determinant()));
        const double corr = r.covariance(0, 1) / std::sqrt(r.covariance(0, 0) * r.covariance(1, 1));
        CHECK(r.correlation == doctest::Approx(corr).epsilon(1e-12));
    }
}

TEST_CASE("mcd correlation: exact relations and scaling invariance")
{
    std::mt19937_64 rng(33);
    const Vector u = oracle::gaussian(50, 1, rng).col(0);
    CHECK(robust_correlation(u, u) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(robust_correlation(u, -u) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(robust_correlation(u, 2.0 * u) == doctest::Approx(1.0).epsilon(1e-10));

    Matrix x = oracle::gaussian(60, 2, rng);
    x.col(1) += 0.5 * x.col(0);
    const double base = robust_correlation(x.col(0), x.col(1), 5);
    const double scaled = robust_correlation(3.0 * x.col(0), 0.01 * x.col(1), 5);
    CHECK(std::abs(base - scaled) < 1e-8);
}

TEST_CASE("mcd correlation resists planted outliers")
{
    // Monte Carlo over 50 replicates; the raw 75% MCD correlation has a standard error near 0.1
    // at n = 500, so the claim is about the replicate average, with a loose per-draw guard
    std::mt19937_64 rng(34);
    double sum = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Matrix x = oracle::gaussian(500, 2, rng);
        for (int i = 0; i < 50; ++i) x.row(i) << 20.0, -20.0;
        McdOptions opts;
        opts.seed = static_cast<std::uint64_t>(rep);
        const double r = mcd_bivariate(x, 0.25, opts).correlation;
        CHECK(std::abs(r) < 0.5);  // Pearson on this data is close to -0.9
        sum += r;
    }
    CHECK(std::abs(sum / 50.0) < 0.1);
}

TEST_CASE("mcd correlation of independent normals is small")
{
    std::mt19937_64 rng(35);
    double sum_abs = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix x = oracle::gaussian(200, 2, rng);
        sum_abs += std::abs(robust_correlation(x.col(0), x.col(1), static_cast<std::uint64_t>(rep)));
    }
    CHECK(sum_abs / 50.0 < 0.2);
}

TEST_CASE("mcd degenerate coordinate")
{
    Matrix x(20, 2);
    x.col(0) = Vector::LinSpaced(20, 0, 1);
    x.col(1).setConstant(3.0);
    CHECK_THROWS_AS(mcd_bivariate(x), DegenerateDataError);
}

TEST_CASE("robust first pc")
{
    std::mt19937_64 rng(36);
    SUBCASE("dominant coordinate")
    {
        Matrix x = oracle::gaussian(200, 4, rng);
        x.col(0) *= 10.0;
        const Vector v = robust_first_pc(x, 1);
        CHECK(std::abs(v(0)) > 0.95);
    }
    SUBCASE("outliers along another axis")
    {
        int ok = 0;
        for (int rep = 0; rep < 20; ++rep) {
            Matrix x = oracle::gaussian(200, 3, rng);
            x.col(0) *= 5.0;
            for (int i = 0; i < 20; ++i) x.row(i) << 0.0, 60.0, 0.0;
            if (std::abs(robust_first_pc(x, static_cast<std::uint64_t>(rep))(0)) > 0.9) ++ok;
        }
        CHECK(ok == 20);
    }
    SUBCASE("single column")
    {
        const Matrix x = oracle::gaussian(30, 1, rng);
        const Vector v = robust_first_pc(x);
        REQUIRE(v.size() == 1);
        CHECK(v(0) == 1.0);
    }
    SUBCASE("unit norm and sign")
    {
        for (int rep = 0; rep < 10; ++rep) {
            const Matrix x = oracle::gaussian(40, 5, rng);
            const Vector v = robust_first_pc(x, static_cast<std::uint64_t>(rep));
            CHECK(std::abs(v.norm() - 1.0) < 1e-12);
            Index at = 0;
            v.cwiseAbs().maxCoeff(&at);
            CHECK(v(at) > 0.0);
        }
    }
    SUBCASE("classical pc")
    {
        Matrix x = oracle::gaussian(300, 3, rng);
        x.col(2) *= 6.0;
        CHECK(std::abs(classical_first_pc(x)(2)) > 0.98);
    }
}

TEST_CASE("distance table")
{
    std::mt19937_64 rng(37);
    SUBCASE("about 2.5 percent beyond the cutoff")
    {
        double beyond_c = 0.0, beyond_r = 0.0;
        const int reps = 20;
        for (int rep = 0; rep < reps; ++rep) {
            const Matrix x = oracle::gaussian(200, 5, rng);
            const auto t = distance_table(x, static_cast<std::uint64_t>(rep));
            for (const auto& d : t) {
                beyond_c += d.classical > d.cutoff;
                beyond_r += d.robust > d.cutoff;
            }
        }
        CHECK(std::abs(beyond_c / (200.0 * reps) - 0.025) < 0.02);
        CHECK(std::abs(beyond_r / (200.0 * reps) - 0.025) < 0.02);
    }
    SUBCASE("planted outlier")
    {
        Matrix x = oracle::gaussian(100, 3, rng);
        x.row(42) << 15.0, 15.0, -15.0;
        const auto t = distance_table(x);
        CHECK(t[42].robust > t[42].cutoff);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].robust <= t[42].robust);
    }
    SUBCASE("classical identity and one dimension")
    {
        const Matrix x = oracle::gaussian(80, 4, rng);
        const auto t = distance_table(x);
        double s = 0.0;
        for (const auto& d : t) s += d.classical * d.classical;
        CHECK(s == doctest::Approx(80.0 * 4.0).epsilon(1e-8));
        CHECK(t[0].cutoff == doctest::Approx(std::sqrt(chi2_quantile(0.975, 4))));

        const Matrix one = oracle::gaussian(50, 1, rng);
        const double mu = one.mean();
        const double sd = std::sqrt((one.array() - mu).square().sum() / 50.0);
        const auto t1 = distance_table(one);
        for (int i = 0; i < 50; ++i) CHECK(t1[static_cast<std::size_t>(i)].classical == doctest::Approx(std::abs(one(i, 0) - mu) / sd));
    }
    SUBCASE("degenerate input")
    {
        Matrix c(30, 1);
        c.setConstant(2.0);
        CHECK_THROWS_AS(distance_table(c), DegenerateDataError);
    }
    CHECK(chi2_quantile(0.975, 2) == doctest::Approx(7.3778).epsilon(1e-4));
}
