#pragma once

#include <array>
#include <optional>

#include "retinabow/features.hpp"
#include "retinabow/image.hpp"

namespace rbow {

inline constexpr int kHogBlockSize = 32;
inline constexpr int kHogCellSize = 16;
inline constexpr int kHogSignedBins = 18;
inline constexpr int kHogUnsignedBins = 9;
inline constexpr int kHogBlockDim = 31;  // 18 directed + 9 undirected + 4 texture

struct GradientField {
    Plane magnitude;
    Plane orientation;  // radians, signed [0, 2*pi)
};

/// Centered differences in the interior, one-sided at the borders.
GradientField gradient(const Plane& p);

struct HogCell {
    std::array<double, kHogSignedBins> signed_bins{};
    std::array<double, kHogUnsignedBins> unsigned_bins{};
    double energy = 0.0;  // sum of squared unsigned bins
};

/// Magnitude-weighted orientation histograms of the 16x16 cell whose top-left
/// corner is (cx, cy). Signed bins cover [0, 2*pi) with mass split linearly
/// between the two bracketing bin centers; unsigned bins fold opposite
/// directions together.
HogCell hog_cell(const GradientField& g, int cx, int cy);

/// 31-dim feature of one 32x32 block: per 16x16 cell, magnitude-weighted
/// 18-bin signed and 9-bin unsigned histograms with circular bilinear bin
/// interpolation; each cell normalized by the four cell energies of the
/// block, clipped at 0.2, projected by summing over normalizations; block
/// feature is the average of its four cells' 31-dim vectors. Null (nullopt)
/// when the block's total gradient energy is below 1e-12.
std::optional<std::array<double, kHogBlockDim>> hog_block(const GradientField& g, int bx, int by);

/// Non-overlapping 32x32 block grid anchored at (0,0); per block the three
/// channels' features stacked (R,G,B) into 93 rows. Blocks null in every
/// channel are dropped.
FeatureMatrix hog_image(const RgbImage& img);

}  // namespace rbow
