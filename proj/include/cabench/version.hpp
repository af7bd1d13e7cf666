#pragma once

namespace cabench {
inline constexpr const char* kVersion = "0.1.0";
}
