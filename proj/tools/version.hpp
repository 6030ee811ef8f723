#pragma once

namespace tmsv::cli {

inline constexpr char kVersion[] = "0.1.0";

} // namespace tmsv::cli
