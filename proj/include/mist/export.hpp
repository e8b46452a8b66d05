// export.hpp: shared CSV/JSON output helpers.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace mist {

// Shortest representation that round-trips.
std::string format_number(double x);

// Each line of `header` is emitted prefixed with "# ". Empty header writes nothing.
void write_comment_header(std::ostream& os, const std::string& header);

// 64-bit FNV-1a, hex encoded. Stable across platforms and runs.
std::string fnv1a_hex(std::string_view bytes);

// Write `contents` to `path`, creating parent directories. Throws mist::Error on failure.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace mist
