#pragma once

namespace blslab {

inline constexpr const char* version = "0.1.0";

} // namespace blslab
