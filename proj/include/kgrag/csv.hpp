#pragma once

// Minimal RFC 4180 reader/writer shared by the chunk, triple and cost tables.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag::csv {

struct Record {
    std::size_t line = 0;  // 1-based physical line where the record starts
    std::vector<std::string> fields;
};

// Parses every record. Quoted fields may contain commas, quotes ("") and
// line breaks. An unterminated quote throws FormatError.
std::vector<Record> parse(std::string_view text);

std::string escape_field(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

}  // namespace kgrag::csv
