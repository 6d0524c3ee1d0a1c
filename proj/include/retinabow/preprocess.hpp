#pragma once

#include "retinabow/image.hpp"

namespace rbow {

struct NormalizationParams {
    double mu_ref = 0.5;
    double sigma_ref = 0.1;
};

/// Illumination correction of the green channel: subtract a median-filtered
/// background estimate (window from median_kernel_for_height), then shift and
/// scale the residual to the target mean and standard deviation. Output is
/// not clipped to [0,1]. A flat residual (std below 1e-12) yields a constant
/// plane at mu_ref.
Plane normalize_green(const RgbImage& img, const NormalizationParams& params = {});

/// Red and blue pass through untouched; green replaced by normalize_green.
RgbImage prepare_channels(const RgbImage& img, const NormalizationParams& params = {});

double plane_mean(const Plane& p);
double plane_std(const Plane& p);  // population convention

}  // namespace rbow
