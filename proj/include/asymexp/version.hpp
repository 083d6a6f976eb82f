#pragma once

namespace asymexp {

inline constexpr const char* kToolName = "asymexp";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace asymexp
