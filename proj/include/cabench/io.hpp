#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cabench {

// Calls fn(line, line_number) for every non-blank line; line numbers are 1-based.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
// Pretty-printed with a trailing newline; key order preserved.
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& value);
nlohmann::json read_json_file(const std::filesystem::path& path);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace cabench
