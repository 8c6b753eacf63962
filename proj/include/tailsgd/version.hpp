#pragma once

namespace tailsgd {

inline constexpr const char* kVersion = "0.1.0";

// Names the exact random-number pipeline so any output file can be tied to the
// generator that produced it. Bump the suffix if the stream derivation, the
// engine, or the normal sampler ever changes.
inline constexpr const char* kGeneratorId =
    "fnv1a-splitmix-streams/mt19937_64/box-muller/v1";

}  // namespace tailsgd
