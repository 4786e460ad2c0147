#pragma once

// CSV and JSON input/output.
//
// CSV rules: comma delimiter, '.' decimal point, optional sign and exponent,
// RFC-4180 double-quote quoting. The first row is a header iff any of its
// cells fails to parse as a number. Blank lines are skipped.

#include <iosfwd>
#include <string>
#include <vector>

#include "rscca/cca.hpp"
#include "rscca/linalg.hpp"
#include "rscca/robust.hpp"
#include "rscca/simulation.hpp"

namespace rscca {

inline constexpr const char* kSchemaVersion = "1.0.0";

struct Table {
    std::vector<std::string> header;  // empty when the file had none
    Matrix values;
};

/// Splits one CSV record; throws InputError on an unterminated quote.
std::vector<std::string> split_csv_line(const std::string& line);

/// Strict number parse of a whole cell (surrounding blanks allowed).
bool parse_number(const std::string& cell, double& out);

Table parse_csv(std::istream& in, const std::string& source = "<input>");
Table read_csv(const std::string& path);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

/// Fixed-point with 4 decimals.
std::string fmt4(double v);

std::string cca_to_json(const CcaFit& fit, int indent = 2);

void write_distances_csv(std::ostream& out, const std::vector<DistancePair>& rows);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::string study_to_json(const std::vector<StudyResult>& studies, int indent = 2);

}  // namespace rscca
