#pragma once

// Simulation designs with block-structured covariance, contamination schemes
// and the multi-run comparison harness.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rscca/cca.hpp"
#include "rscca/linalg.hpp"

namespace rscca {

enum class Scheme { none, symmetric, asymmetric };

std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

struct SimulationDesign {
    std::string name;
    int n = 0;
    int p = 0;
    int q = 0;
    Matrix sigma;       // (p + q) x (p + q) joint covariance
    int true_rank = 1;  // number of population pairs scored by the harness
    int runs = 100;

    Matrix sigma_xy() const { return sigma.topRightCorner(p, q); }
};

std::vector<std::string> builtin_design_names();

/// sparse-low, nonsparse-low or sparse-high.
SimulationDesign builtin_design(std::string_view name);

/// Checks shapes and positive definiteness of the joint covariance.
void validate_design(const SimulationDesign& design);

struct Dataset {
    Matrix x;
    Matrix y;
    int outliers = 0;  // trailing rows drawn from the contamination
};

/// Number of contaminated rows for n observations: n - floor(0.9 n).
int contaminated_rows(int n);

Dataset generate(const SimulationDesign& design, Scheme scheme, std::uint64_t seed);

struct TrueVectors {
    Matrix a;  // p x r
    Matrix b;  // q x r
    Vector correlations;
};

/// Population canonical vectors of the design's covariance.
TrueVectors true_vectors(const SimulationDesign& design);

struct RunRecord {
    std::string method;
    int run = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double angle_a = 0.0;
    double angle_b = 0.0;
    std::optional<double> tpr_a, tnr_a, tpr_b, tnr_b;
    bool converged = false;
    double wall_seconds = 0.0;
};

struct SummaryRow {
    std::string design;
    std::string scheme;
    std::string method;
    std::string metric;
    double median = 0.0;
    double mean = 0.0;
    int runs = 0;      // M
    int failures = 0;
};

struct StudyOptions {
    MethodConfig base;      // variant and seed are set per fit
    int threads = 1;
    std::optional<int> rank;  // defaults to the design's true rank
};

struct StudyResult {
    std::string design;
    std::string scheme;
    int runs = 0;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;  // run-major, methods in request order
    std::vector<SummaryRow> summary;
};

/// Throws UnsupportedConfigError when a non-sparse method is requested with max(p, q) >= n.
StudyResult run_study(const SimulationDesign& design, Scheme scheme, const std::vector<Variant>& methods, int runs,
                      std::uint64_t seed, const StudyOptions& opts = {});

/// Median/mean per (method, metric), recomputed from records alone.
std::vector<SummaryRow> summarize(const std::string& design, const std::string& scheme,
                                  const std::vector<Variant>& methods, const std::vector<RunRecord>& records);

}  // namespace rscca
