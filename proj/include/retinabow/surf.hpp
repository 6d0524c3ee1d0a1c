#pragma once

#include <array>
#include <optional>
#include <vector>

#include "retinabow/features.hpp"
#include "retinabow/image.hpp"

namespace rbow {

struct HessianConfig {
    int octaves = 4;
    int intervals = 4;        // filter sizes per octave
    int init_filter_size = 9;
    double threshold = 1e-4;  // on area-normalized responses
    bool subpixel_refine = true;
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;        // 1.2 * filterSize / 9
    double orientation = 0.0;  // radians in [0, 2*pi)
    double response = 0.0;
};

inline constexpr int kSurfDim = 64;
using SurfDescriptor = std::array<double, kSurfDim>;

/// Filter size of interval i (0-based) in octave o (0-based):
/// 3 * ((i+1) * 2^(o+1) + 1), giving 9,15,21,27 in the first octave.
int surf_filter_size(int octave, int interval);

/// Determinant-of-hessian response map at full pixel resolution for one box
/// filter size: det = DxxDyy - (0.9 Dxy)^2 with each derivative normalized by
/// the filter area. Responses are computed only where the whole filter fits;
/// the outer margin stays zero.
Plane hessian_response(const IntegralImage& ii, int filter_size);

/// Scale-space interest points: strict maxima over the 3x3x3 neighborhood
/// within each octave, thresholded, then refined by 3-D quadratic
/// interpolation (candidates with offset > 0.5 in any dimension are dropped).
std::vector<Keypoint> detect_keypoints(const Plane& plane, const HessianConfig& cfg = {});

/// Dominant orientation: Haar responses (size 4 sigma) on a radius-6-sigma
/// disc, Gaussian-weighted (2.5 sigma), scanned by a sliding pi/3 window.
/// Returns 0 when the keypoint lacks full support or the patch has no
/// gradient.
double assign_orientation(const IntegralImage& ii, const Keypoint& kp);

/// 64-dim descriptor: 4x4 subregions, 5x5 Haar samples (size 2 sigma) per
/// subregion spaced sigma apart, Gaussian-weighted (3.3 sigma), rotated into
/// the keypoint frame unless upright; (sum dx, sum dy, sum |dx|, sum |dy|)
/// per subregion, L2-normalized. Null (nullopt) when the pre-normalization
/// norm falls below 1e-12.
std::optional<SurfDescriptor> describe(const IntegralImage& ii, const Keypoint& kp, bool upright);

/// Per-channel detection plus oriented description; columns concatenated
/// channel-major (R,G,B). Throws when no channel yields a keypoint.
FeatureMatrix sparse_surf(const RgbImage& img, const HessianConfig& cfg = {});

/// Upright descriptors at fixed sigma = 1.6 on a non-overlapping 16x16 grid
/// (cell centers), 32-px window; the three channels' 64-dim vectors stacked
/// (R,G,B) into 192 rows. Cells whose descriptor support leaves the image,
/// or that are null in any channel, are dropped.
FeatureMatrix dense_surf(const RgbImage& img);

}  // namespace rbow
