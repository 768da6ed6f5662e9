// version.hpp — tool version embedded in CSV output headers
#pragma once

namespace cdbound {
inline constexpr const char* kVersion = "0.1.0";
}
