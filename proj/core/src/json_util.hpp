#pragma once

// Private helpers shared by the JSON-reading modules.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace qqeval::detail {

using json = nlohmann::json;

struct LineColumn {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// 1-based line/column of a byte offset.
inline LineColumn locate(std::string_view text, std::size_t offset) {
  LineColumn lc;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++lc.line;
      lc.column = 1;
    } else {
      ++lc.column;
    }
  }
  return lc;
}

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file, replacing any previous content; throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Parses JSON, reporting syntax errors as "<origin>: line L, column C: ..."
/// through the exception type E (constructed from a message).
template <typename E>
json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is 1-based and points one past the offending character.
    const auto lc = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw E(origin + ": line " + std::to_string(lc.line) + ", column " +
            std::to_string(lc.column) + ": invalid JSON");
  }
}

/// Current UTC time as ISO-8601 with second precision.
std::string utc_timestamp();

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace qqeval::detail
