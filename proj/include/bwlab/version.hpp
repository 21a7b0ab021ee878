#pragma once

namespace bwlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bwlab
