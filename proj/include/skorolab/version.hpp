#pragma once

namespace skorolab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace skorolab
