#include "rscca/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rscca/errors.hpp"
#include "rscca/evaluation.hpp"
#include "rscca/io.hpp"
#include "rscca/robust.hpp"
#include "rscca/simulation.hpp"

namespace rscca {

namespace {

using nlohmann::json;

const std::vector<std::string> kAllMethods{"classical", "robust", "sparse", "robust-sparse"};
const std::vector<std::string> kAllSchemes{"none", "symmetric", "asymmetric"};

struct Inputs {
    Matrix x;
    Matrix y;
    std::vector<std::string> x_names;
    std::vector<std::string> y_names;
};

std::vector<std::string> default_names(const std::string& prefix, Index count)
{
    std::vector<std::string> out;
    for (Index j = 0; j < count; ++j) out.push_back(prefix + std::to_string(j + 1));
    return out;
}

Inputs load_inputs(const RunConfig& cfg)
{
    Inputs in;
    if (!cfg.data_path.empty()) {
        if (cfg.x_columns.empty()) throw InputError("--data needs --columns to say which columns form X");
        const Table t = read_csv(cfg.data_path);
        const Index cols = t.values.cols();
        std::vector<bool> is_x(static_cast<std::size_t>(cols), false);
        for (int c : cfg.x_columns) {
            if (c < 1 || c > cols)
                throw InputError("column " + std::to_string(c) + " outside 1.." + std::to_string(cols));
            if (is_x[static_cast<std::size_t>(c - 1)]) throw InputError("column " + std::to_string(c) + " repeated");
            is_x[static_cast<std::size_t>(c - 1)] = true;
        }
        std::vector<Index> xi, yi;
        for (Index j = 0; j < cols; ++j) (is_x[static_cast<std::size_t>(j)] ? xi : yi).push_back(j);
        if (yi.empty()) throw InputError("--columns leaves no columns for Y");
        in.x = t.values(Eigen::all, xi);
        in.y = t.values(Eigen::all, yi);
        for (Index j : xi) in.x_names.push_back(t.header.empty() ? "x" + std::to_string(j + 1) : t.header[j]);
        for (Index j : yi) in.y_names.push_back(t.header.empty() ? "y" + std::to_string(j + 1) : t.header[j]);
        return in;
    }
    if (cfg.x_path.empty() || cfg.y_path.empty()) throw InputError("both --x and --y are required");
    const Table tx = read_csv(cfg.x_path);
    const Table ty = read_csv(cfg.y_path);
    if (tx.values.rows() != ty.values.rows())
        throw InputError("row count mismatch: " + cfg.x_path + " has " + std::to_string(tx.values.rows()) +
                         " rows, " + cfg.y_path + " has " + std::to_string(ty.values.rows()));
    in.x = tx.values;
    in.y = ty.values;
    in.x_names = tx.header.empty() ? default_names("x", in.x.cols()) : tx.header;
    in.y_names = ty.header.empty() ? default_names("y", in.y.cols()) : ty.header;
    return in;
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    return f;
}

std::size_t width_of(const std::vector<std::string>& names, std::size_t at_least)
{
    std::size_t w = at_least;
    for (const auto& s : names) w = std::max(w, s.size());
    return w;
}

void print_vectors(std::ostream& out, const std::string& title, const std::vector<std::string>& names,
                   const Matrix& m, const std::string& prefix)
{
    const std::size_t w = width_of(names, title.size());
    out << std::left << std::setw(static_cast<int>(w)) << title << std::right;
    for (Index k = 0; k < m.cols(); ++k) out << std::setw(10) << prefix + std::to_string(k + 1);
    out << '\n';
    for (Index j = 0; j < m.rows(); ++j) {
        out << std::left << std::setw(static_cast<int>(w)) << names[static_cast<std::size_t>(j)] << std::right;
        for (Index k = 0; k < m.cols(); ++k) out << std::setw(10) << fmt4(m(j, k));
        out << '\n';
    }
}

void check_methods(const std::vector<std::string>& methods)
{
    for (const auto& m : methods) (void)parse_variant(m);
}

std::vector<std::string> expand(const std::vector<std::string>& names, const std::vector<std::string>& all)
{
    if (names.size() == 1 && names.front() == "all") return all;
    return names;
}

int env_threads(int fallback)
{
    if (const char* env = std::getenv("RSCCA_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw InputError("RSCCA_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    return fallback;
}

}  // namespace

MethodConfig RunConfig::method_config(const std::string& method) const
{
    MethodConfig c;
    c.variant = parse_variant(method);
    c.trim = trim;
    c.lambda_grid = lambda_grid;
    c.pair_lambdas = pair_lambdas;
    c.lambda_grid_size = lambda_grid_size;
    c.lambda_ratio = lambda_ratio;
    c.search.n_starts = starts;
    c.mcd_starts = starts;
    c.seed = seed;
    c.validate();
    return c;
}

std::string run_config_to_json(const RunConfig& c, int indent)
{
    json pl = json::array();
    for (const auto& p : c.pair_lambdas) pl.push_back({p[0], p[1]});
    json doc = {
        {"schema_version", kSchemaVersion},
        {"command", c.command},
        {"x", c.x_path},
        {"y", c.y_path},
        {"data", c.data_path},
        {"columns", c.x_columns},
        {"methods", c.methods},
        {"variates", c.variates ? json(*c.variates) : json("auto")},
        {"trim", c.trim},
        {"lambda_grid", c.lambda_grid},
        {"pair_lambdas", pl},
        {"lambda_grid_size", c.lambda_grid_size},
        {"lambda_ratio", c.lambda_ratio},
        {"starts", c.starts},
        {"alphas", c.alphas},
        {"design", c.design},
        {"schemes", c.schemes},
        {"runs", c.runs},
        {"output", c.output},
        {"json_output", c.json_output},
        {"format", c.format},
        {"seed", c.seed},
        {"threads", c.threads},
    };
    return doc.dump(indent);
}

RunConfig run_config_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        c.command = doc.at("command").get<std::string>();
        c.x_path = doc.at("x").get<std::string>();
        c.y_path = doc.at("y").get<std::string>();
        c.data_path = doc.at("data").get<std::string>();
        c.x_columns = doc.at("columns").get<std::vector<int>>();
        c.methods = doc.at("methods").get<std::vector<std::string>>();
        const json& v = doc.at("variates");
        if (v.is_string()) {
            if (v.get<std::string>() != "auto") throw InputError("variates must be an integer or \"auto\"");
            c.variates.reset();
        } else {
            c.variates = v.get<int>();
        }
        c.trim = doc.at("trim").get<double>();
        c.lambda_grid = doc.at("lambda_grid").get<std::vector<double>>();
        c.pair_lambdas.clear();
        for (const auto& p : doc.at("pair_lambdas")) c.pair_lambdas.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        c.lambda_grid_size = doc.at("lambda_grid_size").get<int>();
        c.lambda_ratio = doc.at("lambda_ratio").get<double>();
        c.starts = doc.at("starts").get<int>();
        c.alphas = doc.at("alphas").get<std::vector<double>>();
        c.design = doc.at("design").get<std::string>();
        c.schemes = doc.at("schemes").get<std::vector<std::string>>();
        c.runs = doc.at("runs").get<int>();
        c.output = doc.at("output").get<std::string>();
        c.json_output = doc.at("json_output").get<std::string>();
        c.format = doc.at("format").get<std::string>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.threads = doc.at("threads").get<int>();
    } catch (const json::exception& e) {
        throw InputError(std::string("config field error: ") + e.what());
    }
    return c;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.methods.size() != 1) throw InputError("fit takes exactly one method");
    const MethodConfig mc = cfg.method_config(cfg.methods.front());
    const Inputs in = load_inputs(cfg);
    const CcaFit fit = fit_cca(in.x, in.y, mc, cfg.variates);
    const std::string doc = cca_to_json(fit);
    if (!cfg.output.empty()) {
        auto f = open_output(cfg.output);
        f << doc << '\n';
    }
    if (cfg.format == "json") {
        out << doc << '\n';
        return 0;
    }
    out << "method " << to_string(mc.variant) << ", n = " << fit.rows() << ", r = " << fit.rank
        << (fit.rank_selected ? " (eigenvalue-ratio choice)" : "") << "\n\n";
    print_vectors(out, "X variable", in.x_names, fit.a, "A");
    out << '\n';
    print_vectors(out, "Y variable", in.y_names, fit.b, "B");
    out << '\n';
    const std::size_t w = width_of(in.x_names, std::string("X variable").size());
    out << std::left << std::setw(static_cast<int>(w)) << "correlation" << std::right;
    for (Index k = 0; k < fit.correlations.size(); ++k) out << std::setw(10) << fmt4(fit.correlations(k));
    out << '\n';
    for (std::size_t k = 0; k < fit.logs.size(); ++k)
        if (!fit.logs[k].converged)
            out << "note: pair " << k + 1 << " stopped after " << fit.logs[k].iterations
                << " alternations without converging\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out)
{
    const SimulationDesign design = builtin_design(cfg.design);
    auto methods = expand(cfg.methods, kAllMethods);
    const auto schemes = expand(cfg.schemes, kAllSchemes);
    check_methods(methods);
    if (cfg.methods == std::vector<std::string>{"all"} && std::max(design.p, design.q) >= design.n) {
        // only the penalized methods are defined when a block has as many columns as rows
        std::erase_if(methods, [](const std::string& m) { return !is_sparse(parse_variant(m)); });
    }
    if (cfg.runs < 1) throw InputError("--runs must be at least 1");
    std::vector<Variant> variants;
    for (const auto& m : methods) variants.push_back(parse_variant(m));

    StudyOptions opts;
    opts.base = cfg.method_config(methods.front());
    opts.threads = cfg.threads;
    opts.rank = cfg.variates;
    std::vector<StudyResult> studies;
    for (const auto& s : schemes)
        studies.push_back(run_study(design, parse_scheme(s), variants, cfg.runs, cfg.seed, opts));

    std::vector<SummaryRow> rows;
    for (const auto& s : studies) rows.insert(rows.end(), s.summary.begin(), s.summary.end());
    if (!cfg.output.empty()) {
        auto f = open_output(cfg.output);
        write_summary_csv(f, rows);
    }
    if (!cfg.json_output.empty()) {
        auto f = open_output(cfg.json_output);
        f << study_to_json(studies) << '\n';
    }
    if (cfg.format == "json") {
        out << study_to_json(studies) << '\n';
        return 0;
    }
    if (cfg.format == "csv") {
        write_summary_csv(out, rows);
        return 0;
    }
    out << "design " << design.name << ", M = " << cfg.runs << ", seed " << cfg.seed << '\n';
    out << std::left << std::setw(12) << "scheme" << std::setw(15) << "method" << std::setw(9) << "metric"
        << std::right << std::setw(10) << "median" << std::setw(10) << "mean" << std::setw(10) << "failures"
        << '\n';
    for (const auto& r : rows)
        out << std::left << std::setw(12) << r.scheme << std::setw(15) << r.method << std::setw(9) << r.metric
            << std::right << std::setw(10) << fmt4(r.median) << std::setw(10) << fmt4(r.mean) << std::setw(10)
            << r.failures << '\n';
    return 0;
}

int cmd_cv(const RunConfig& cfg, std::ostream& out)
{
    const auto methods = expand(cfg.methods, kAllMethods);
    check_methods(methods);
    const Inputs in = load_inputs(cfg);
    const int r = cfg.variates.value_or(1);
    CvOptions opts;
    opts.threads = cfg.threads;

    out << std::left << std::setw(15) << "method" << std::right;
    for (double a : cfg.alphas) {
        std::ostringstream head;
        head << "alpha=" << a;
        out << std::setw(12) << head.str();
    }
    out << std::setw(8) << "folds" << '\n';
    for (const auto& m : methods) {
        const auto res = cv_scores(in.x, in.y, cfg.method_config(m), r, cfg.alphas, opts);
        out << std::left << std::setw(15) << m << std::right;
        for (const auto& c : res) out << std::setw(12) << fmt4(c.score);
        out << std::setw(8) << res.back().folds_used << '\n';
        int failures = res.front().failures;
        if (failures > 0) out << "note: " << failures << " folds of " << m << " failed and were dropped\n";
    }
    return 0;
}

int cmd_distances(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.data_path.empty()) throw InputError("distances needs --data");
    const Table t = read_csv(cfg.data_path);
    const auto rows = distance_table(t.values, cfg.seed);
    if (!cfg.output.empty()) {
        auto f = open_output(cfg.output);
        write_distances_csv(f, rows);
    } else {
        write_distances_csv(out, rows);
    }
    return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Robust sparse canonical correlation analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rscca 1.0.0");

    RunConfig cfg;
    cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string variates = "auto";
    std::string method = "robust-sparse";
    std::vector<double> pair_lambdas;
    bool dump_config = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "Random seed");
        sub->add_option("--threads", cfg.threads, "Worker threads (RSCCA_THREADS overrides)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--dump-config", dump_config, "Print the parsed configuration as JSON and exit");
    };
    auto add_method_opts = [&](CLI::App* sub) {
        sub->add_option("--trim", cfg.trim, "Trimming fraction of the LTS regressions")->check(CLI::Range(0.0, 0.5));
        sub->add_option("--lambda-grid", cfg.lambda_grid, "Comma-separated penalty grid")->delimiter(',');
        sub->add_option("--pair-lambdas", pair_lambdas, "Fixed penalties a1,b1,a2,b2,... per pair")
            ->delimiter(',');
        sub->add_option("--grid-size", cfg.lambda_grid_size, "Data-driven grid length")->check(CLI::PositiveNumber);
        sub->add_option("--grid-ratio", cfg.lambda_ratio, "Smallest over largest grid value");
        sub->add_option("--starts", cfg.starts, "Random starts of the trimmed searches")->check(CLI::PositiveNumber);
        sub->add_option("--variates", variates, "Number of canonical pairs or 'auto'");
    };
    auto add_inputs = [&](CLI::App* sub) {
        sub->add_option("--x", cfg.x_path, "CSV of the X variables");
        sub->add_option("--y", cfg.y_path, "CSV of the Y variables");
        sub->add_option("--data", cfg.data_path, "Single CSV holding X and Y");
        sub->add_option("--columns", cfg.x_columns, "1-based columns of --data forming X")->delimiter(',');
    };

    CLI::App* fit = app.add_subcommand("fit", "Estimate canonical vectors and correlations");
    add_inputs(fit);
    add_method_opts(fit);
    add_common(fit);
    fit->add_option("--method", method, "classical, robust, sparse or robust-sparse");
    fit->add_option("--output", cfg.output, "Write the fit as JSON to this path");
    fit->add_option("--format", cfg.format, "Standard output format")->check(CLI::IsMember({"table", "json"}));

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo comparison on a built-in design");
    add_method_opts(sim);
    add_common(sim);
    sim->add_option("--design", cfg.design, "sparse-low, nonsparse-low or sparse-high");
    sim->add_option("--scheme", cfg.schemes, "none, symmetric, asymmetric or all")->delimiter(',');
    sim->add_option("--methods", cfg.methods, "Comma-separated methods or all")->delimiter(',');
    sim->add_option("--runs", cfg.runs, "Number of simulated data sets")->check(CLI::PositiveNumber);
    sim->add_option("--output", cfg.output, "Summary CSV path");
    sim->add_option("--json", cfg.json_output, "Summary JSON path");
    sim->add_option("--format", cfg.format, "Standard output format")
        ->check(CLI::IsMember({"table", "json", "csv"}));

    CLI::App* cv = app.add_subcommand("cv", "Trimmed leave-one-out cross-validation scores");
    add_inputs(cv);
    add_method_opts(cv);
    add_common(cv);
    cv->add_option("--methods", cfg.methods, "Comma-separated methods or all")->delimiter(',');
    cv->add_option("--alpha", cfg.alphas, "Comma-separated CV trimming levels")->delimiter(',');

    CLI::App* dist = app.add_subcommand("distances", "Classical and robust Mahalanobis distances");
    dist->add_option("--data", cfg.data_path, "Numeric CSV")->required();
    dist->add_option("--output", cfg.output, "CSV path; standard output when absent");
    add_common(dist);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "rscca 1.0.0\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        cfg.command = chosen->get_name();
        if (chosen == fit) cfg.methods = {method};
        if (variates != "auto") {
            int v = 0;
            std::istringstream is(variates);
            if (!(is >> v) || !is.eof() || v < 1) throw InputError("--variates must be a positive integer or 'auto'");
            cfg.variates = v;
        }
        if (pair_lambdas.size() % 2 != 0) throw InputError("--pair-lambdas needs an even number of values");
        for (std::size_t i = 0; i < pair_lambdas.size(); i += 2)
            cfg.pair_lambdas.push_back({pair_lambdas[i], pair_lambdas[i + 1]});
        cfg.threads = env_threads(cfg.threads);

        if (dump_config) {
            out << run_config_to_json(cfg) << '\n';
            return 0;
        }
        if (chosen == fit) return cmd_fit(cfg, out);
        if (chosen == sim) return cmd_simulate(cfg, out);
        if (chosen == cv) return cmd_cv(cfg, out);
        return cmd_distances(cfg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace rscca
