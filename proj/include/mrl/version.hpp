#pragma once

namespace mrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mrl
