#pragma once

namespace cohbench {

inline constexpr const char* kToolName = "cohbench";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cohbench
