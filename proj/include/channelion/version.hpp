#pragma once

namespace channelion {

inline constexpr const char* kVersion = "0.1.0";
/// Version of the JSON config and manifest schemas.
inline constexpr int kSchemaVersion = 1;

}  // namespace channelion
