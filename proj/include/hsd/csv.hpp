#pragma once

#include <string>
#include <vector>

namespace hsd {

// RFC-4180 CSV. Fields may be quoted; quoted fields may contain commas,
// doubled quotes, and line breaks. Accepts both LF and CRLF records.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column; throws std::runtime_error if absent.
    std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& content);
CsvTable read_csv(const std::string& path);

std::string csv_escape(const std::string& field);
std::string to_csv(const CsvTable& table);

}  // namespace hsd
