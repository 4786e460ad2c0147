#include "rscca/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rscca/errors.hpp"

namespace rscca {

namespace {

using nlohmann::json;

json matrix_rows(const Matrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

json config_json(const MethodConfig& c)
{
    json pl = json::array();
    for (const auto& p : c.pair_lambdas) pl.push_back({p[0], p[1]});
    return {
        {"method", to_string(c.variant)},
        {"trim", c.trim},
        {"tolerance", c.tolerance},
        {"max_alternations", c.max_alternations},
        {"lambda_grid_size", c.lambda_grid_size},
        {"lambda_ratio", c.lambda_ratio},
        {"lambda_grid", c.lambda_grid},
        {"pair_lambdas", pl},
        {"starts", c.search.n_starts},
        {"warm_random_starts", c.warm_random_starts},
        {"seed", c.seed},
    };
}

std::string trim_blanks(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw InputError("unterminated quoted field");
    cells.push_back(std::move(cur));
    return cells;
}

bool parse_number(const std::string& cell, double& out)
{
    std::string s = trim_blanks(cell);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out, std::chars_format::general);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

Table parse_csv(std::istream& in, const std::string& source)
{
    std::vector<std::vector<std::string>> records;
    std::vector<int> line_numbers;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim_blanks(line).empty()) continue;
        try {
            records.push_back(split_csv_line(line));
        } catch (const InputError& e) {
            throw InputError(source + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        line_numbers.push_back(lineno);
    }
    if (records.empty()) throw InputError(source + ": no data");

    Table t;
    std::size_t start = 0;
    double dummy = 0.0;
    for (const auto& cell : records.front()) {
        if (!parse_number(cell, dummy)) {
            for (const auto& h : records.front()) t.header.push_back(trim_blanks(h));
            start = 1;
            break;
        }
    }
    const std::size_t rows = records.size() - start;
    if (rows == 0) throw InputError(source + ": header but no data rows");
    const std::size_t cols = records[start].size();
    t.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& rec = records[start + r];
        if (rec.size() != cols)
            throw InputError(source + ": line " + std::to_string(line_numbers[start + r]) + " has " +
                             std::to_string(rec.size()) + " fields, expected " + std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!parse_number(rec[c], v))
                throw InputError(source + ": non-numeric cell '" + rec[c] + "' at row " + std::to_string(r + 1) +
                                 ", column " + std::to_string(c + 1));
            t.values(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    if (!t.header.empty() && t.header.size() != cols)
        throw InputError(source + ": header has " + std::to_string(t.header.size()) + " fields, data has " +
                         std::to_string(cols));
    return t;
}

Table read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_csv(in, path);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt4(double v)
{
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

std::string cca_to_json(const CcaFit& fit, int indent)
{
    json logs = json::array();
    for (const auto& l : fit.logs) {
        logs.push_back({
            {"iterations", l.iterations},
            {"converged", l.converged},
            {"angle_a", l.angle_a},
            {"angle_b", l.angle_b},
            {"lambda_a", l.lambda_a},
            {"lambda_b", l.lambda_b},
            {"reweighted", l.reweighted},
            {"regression_objective", l.regression_objective},
            {"pair_objective", l.pair_objective},
        });
    }
    json doc = {
        {"schema_version", kSchemaVersion},
        {"method", to_string(fit.config.variant)},
        {"n", fit.rows()},
        {"p", fit.a.rows()},
        {"q", fit.b.rows()},
        {"rank", fit.rank},
        {"rank_selected", fit.rank_selected},
        {"A", matrix_rows(fit.a)},
        {"B", matrix_rows(fit.b)},
        {"correlations", vector_json(fit.correlations)},
        {"all_correlations", fit.all_correlations},
        {"x_center", vector_json(fit.x_center)},
        {"y_center", vector_json(fit.y_center)},
        {"convergence", logs},
        {"config", config_json(fit.config)},
    };
    return doc.dump(indent);
}

void write_distances_csv(std::ostream& out, const std::vector<DistancePair>& rows)
{
    out << "index,classical,robust,cutoff\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << i + 1 << ',' << fmt4(rows[i].classical) << ',' << fmt4(rows[i].robust) << ',' << fmt4(rows[i].cutoff)
            << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows)
{
    out << "design,scheme,method,metric,median,mean,M,failures\n";
    for (const auto& r : rows)
        out << csv_field(r.design) << ',' << csv_field(r.scheme) << ',' << csv_field(r.method) << ','
            << csv_field(r.metric) << ',' << fmt4(r.median) << ',' << fmt4(r.mean) << ',' << r.runs << ','
            << r.failures << '\n';
}

std::string study_to_json(const std::vector<StudyResult>& studies, int indent)
{
    json arr = json::array();
    for (const auto& s : studies) {
        json rows = json::array();
        for (const auto& r : s.summary)
            rows.push_back({{"design", r.design},
                            {"scheme", r.scheme},
                            {"method", r.method},
                            {"metric", r.metric},
                            {"median", r.median},
                            {"mean", r.mean},
                            {"M", r.runs},
                            {"failures", r.failures}});
        json errors = json::array();
        for (const auto& rec : s.records)
            if (rec.failed) errors.push_back({{"method", rec.method}, {"run", rec.run}, {"error", rec.error}});
        arr.push_back({{"design", s.design},
                       {"scheme", s.scheme},
                       {"M", s.runs},
                       {"seed", s.seed},
                       {"summary", rows},
                       {"failed_runs", errors}});
    }
    json doc = {{"schema_version", kSchemaVersion}, {"studies", arr}};
    return doc.dump(indent);
}

}  // namespace rscca
