#pragma once

namespace actprof {

inline constexpr const char* tool_name = "actprof";
inline constexpr const char* tool_version = "0.1.0";

} // namespace actprof
