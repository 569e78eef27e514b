#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace micsnet {

// Shortest decimal form that round-trips the exact double value.
std::string fmt_double(double v);

// Strict parses: the whole token must be consumed. Return false on failure.
bool parse_double(std::string_view token, double& out);
bool parse_u64(std::string_view token, std::uint64_t& out);

}  // namespace micsnet
