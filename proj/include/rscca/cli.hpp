#pragma once

// Command-line front end: fit, simulate, cv and distances.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rscca/cca.hpp"

namespace rscca {

struct RunConfig {
    std::string command;
    std::string x_path;
    std::string y_path;
    std::string data_path;        // single-file input (distances, or fit/cv with columns)
    std::vector<int> x_columns;   // 1-based columns of data_path forming X; the rest form Y
    std::vector<std::string> methods{"robust-sparse"};
    std::optional<int> variates;  // empty means the eigenvalue-ratio choice
    double trim = 0.25;
    std::vector<double> lambda_grid;
    std::vector<std::array<double, 2>> pair_lambdas;
    int lambda_grid_size = 20;
    double lambda_ratio = 1e-3;
    int starts = 500;
    std::vector<double> alphas{1.0, 0.9};
    std::string design = "sparse-low";
    std::vector<std::string> schemes{"none"};
    int runs = 100;
    std::string output;      // JSON (fit) or CSV (simulate, distances) path; empty means none
    std::string json_output; // simulate only
    std::string format = "table";
    std::uint64_t seed = 0;
    int threads = 1;

    /// MethodConfig for one method name; the seed and budgets come from this config.
    MethodConfig method_config(const std::string& method) const;
};

std::string run_config_to_json(const RunConfig& cfg, int indent = 2);
RunConfig run_config_from_json(const std::string& text);

/// Parses argv, runs the command and returns the exit code: 0 on success, 1 on a data or
/// configuration error, 2 on a usage error. Messages go to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_fit(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_cv(const RunConfig& cfg, std::ostream& out);
int cmd_distances(const RunConfig& cfg, std::ostream& out);

}  // namespace rscca
