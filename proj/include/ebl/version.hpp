#pragma once

namespace ebl {

inline constexpr const char* kToolName = "ebldose";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace ebl
