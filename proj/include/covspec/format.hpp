#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "covspec/panel.hpp"

namespace covspec
{

/// Shortest-independent, locale-free rendering with 17 significant digits.
std::string format_double(double value);

/// Shortest representation that round-trips; used for echoing config values.
std::string format_shortest(double value);

/// Parses a full string as a double; rejects trailing garbage.
bool parse_double(std::string_view text, double &out);

/// Splits one CSV line on commas (no quoting; asset ids must not contain commas).
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view text);

/// Writes `date,<ids...>` followed by one row per date.
void write_panel_csv(std::ostream &out, const std::vector<std::string> &asset_ids,
                     const std::vector<std::string> &dates, const Eigen::MatrixXd &values);

void write_provenance(std::ostream &out, const std::vector<ProvenanceEntry> &log);

} // namespace covspec
