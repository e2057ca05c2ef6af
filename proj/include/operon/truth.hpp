#pragma once

#include <cstdint>

#include "operon/mesh.hpp"

namespace operon {

/// Synthetic ground-truth w for inversion experiments: a fixed, seeded
/// bump-like field (generator version "truth-v1"). Two smooth Gaussian bumps
/// of opposite sign; centers, widths, and amplitudes are deterministic
/// functions of the seed so experiments are self-contained.
NodalField make_truth_field(const Mesh& mesh, std::uint64_t seed);

inline constexpr const char* kTruthGeneratorVersion = "truth-v1";

} // namespace operon
