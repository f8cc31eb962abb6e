#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace screensum::cli {

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

// 64-bit FNV-1a, rendered as 16 hex digits in manifests.
std::uint64_t fnv1a(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

// "lo:hi:step" (inclusive) or a comma-separated list.
std::vector<double> parse_values(const std::string& spec);

}  // namespace screensum::cli
