#pragma once

#include <string_view>

namespace olaraw {

enum class Regime { kIoBound, kCpuBound };

inline std::string_view to_string(Regime r) { return r == Regime::kIoBound ? "IO_BOUND" : "CPU_BOUND"; }

}  // namespace olaraw
