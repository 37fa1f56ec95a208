#include "covspec/format.hpp"

#include <charconv>
#include <cmath>

namespace covspec
{

std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
    return std::string(buffer, result.ptr);
}

std::string format_shortest(double value)
{
    if (!std::isfinite(value))
        return format_double(value);
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

bool parse_double(std::string_view text, double &out)
{
    text = trim(text);
    if (text.empty())
        return false;
    if (text.front() == '+')
        text.remove_prefix(1);
    const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
    return result.ec == std::errc() && result.ptr == text.data() + text.size();
}

std::string_view trim(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = line.find(',', start);
        const auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        fields.emplace_back(trim(field));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

void write_panel_csv(std::ostream &out, const std::vector<std::string> &asset_ids,
                     const std::vector<std::string> &dates, const Eigen::MatrixXd &values)
{
    out << "date";
    for (const auto &id : asset_ids)
        out << ',' << id;
    out << '\n';
    for (Eigen::Index t = 0; t < values.cols(); ++t)
    {
        out << dates[static_cast<std::size_t>(t)];
        for (Eigen::Index a = 0; a < values.rows(); ++a)
            out << ',' << format_double(values(a, t));
        out << '\n';
    }
}

void write_provenance(std::ostream &out, const std::vector<ProvenanceEntry> &log)
{
    for (const auto &entry : log)
        out << entry.date << ',' << entry.asset << ',' << entry.action << '\n';
}

} // namespace covspec
