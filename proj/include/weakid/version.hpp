#pragma once

namespace weakid {

inline constexpr const char* version = "0.1.0";

}  // namespace weakid
