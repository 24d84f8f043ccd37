#pragma once

namespace svpde {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace svpde
