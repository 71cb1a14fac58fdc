#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

bool is_space(char c) noexcept;

// Maximal runs of non-whitespace characters, in order.
std::vector<std::string> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

// Prefix of text ending right after the max_tokens-th token. Whitespace
// between kept tokens is preserved; trailing whitespace is dropped.
std::string truncate_tokens(std::string_view text, std::size_t max_tokens);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

bool is_valid_utf8(std::string_view bytes) noexcept;

std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace kgrag
