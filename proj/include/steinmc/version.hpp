#pragma once

namespace steinmc {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kRecordSchema = "steinmc.record.v1";

}  // namespace steinmc
