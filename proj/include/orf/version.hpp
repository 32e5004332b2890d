#pragma once

namespace orf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace orf
