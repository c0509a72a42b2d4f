#pragma once

namespace salab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace salab
