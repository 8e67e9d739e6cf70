#pragma once

namespace cuisine {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;

}  // namespace cuisine
