#pragma once

#include <istream>
#include <string>
#include <vector>

namespace dbal::detail {

/// Reads one CSV record (RFC 4180 quoting, records may span lines inside
/// quotes). Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

std::string trim(const std::string& s);

double parse_real(const std::string& text, const std::string& context);

}  // namespace dbal::detail
