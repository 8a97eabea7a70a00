#pragma once

namespace pricesim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pricesim
