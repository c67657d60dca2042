#pragma once

namespace perfit {

inline constexpr const char* kToolName = "perfit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace perfit
