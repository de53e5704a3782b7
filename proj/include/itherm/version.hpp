#pragma once

namespace itherm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace itherm
