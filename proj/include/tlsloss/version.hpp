#pragma once

namespace tlsloss {
inline constexpr const char* kVersion = "0.1.0";
}
