#pragma once

#include <array>
#include <optional>

#include "retinabow/features.hpp"
#include "retinabow/image.hpp"

namespace rbow {

inline constexpr int kLbpBins = 58;
inline constexpr int kLbpNonUniform = -1;
inline constexpr int kLbpPatchSize = 32;

/// 8-bit pattern of a 3x3 neighborhood. Bit p is 1 when neighbor p is >= the
/// center value; neighbors are visited clockwise starting at the top-left,
/// with bit p carrying weight 2^p.
int lbp_code(const std::array<double, 9>& window);

/// Number of 0/1 changes over the circular 8-bit sequence.
int circular_transitions(int code);

/// code -> bin index for the 58 uniform patterns (at most two circular
/// transitions), assigned in ascending numeric order; -1 for the rest.
using UniformTable = std::array<int, 256>;
const UniformTable& uniform_table();

/// 58-bin L1-normalized histogram of uniform codes over the 30x30 interior of
/// a 32x32 patch at (px, py). Null (nullopt) when the patch lies in the black
/// surround (max intensity < 1e-6).
std::optional<std::array<double, kLbpBins>> lbp_patch_histogram(const Plane& plane, int px, int py);

/// Non-overlapping 32x32 patch grid; per patch the three channels' histograms
/// stacked (R,G,B) into 174 rows. Patches null in every channel are dropped.
FeatureMatrix lbp_image(const RgbImage& img);

}  // namespace rbow
