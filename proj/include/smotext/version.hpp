#pragma once

namespace smotext {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace smotext
