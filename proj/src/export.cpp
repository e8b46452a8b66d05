#include "mist/export.hpp"

#include "mist/error.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mist {

std::string format_number(double x) {
    if (x == 0.0) x = 0.0;  // drop the sign of negative zero
    return fmt::format("{}", x);
}

void write_comment_header(std::ostream& os, const std::string& header) {
    if (header.empty()) return;
    std::istringstream in(header);
    std::string line;
    while (std::getline(in, line)) os << "# " << line << '\n';
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return fmt::format("{:016x}", h);
}

void write_text_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw Error("io", "cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("io", "cannot open " + path + " for writing");
    out << contents;
    if (!out) throw Error("io", "write failed for " + path);
}

}  // namespace mist
