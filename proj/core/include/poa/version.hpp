#pragma once

#include <string_view>

namespace poa {

inline constexpr std::string_view kVersion = "poalab 0.1.0";

}  // namespace poa
