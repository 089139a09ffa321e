#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace som::resources {

/// Bytes of a file from data/, embedded at build time. Throws if unknown.
std::string_view get(std::string_view name);

std::vector<std::string> names();

}  // namespace som::resources
