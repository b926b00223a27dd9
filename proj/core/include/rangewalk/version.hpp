#pragma once

namespace rangewalk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rangewalk
