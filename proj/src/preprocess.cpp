#include "retinabow/preprocess.hpp"

#include <cmath>
#include <stdexcept>

namespace rbow {

double plane_mean(const Plane& p) {
    if (p.data.empty()) return 0.0;
    double s = 0.0;
    for (double v : p.data) s += v;
    return s / p.data.size();
}

double plane_std(const Plane& p) {
    if (p.data.empty()) return 0.0;
    double mu = plane_mean(p);
    double s = 0.0;
    for (double v : p.data) {
        double d = v - mu;
        s += d * d;
    }
    return std::sqrt(s / p.data.size());
}

Plane normalize_green(const RgbImage& img, const NormalizationParams& params) {
    if (params.sigma_ref <= 0.0) throw std::invalid_argument("normalize_green: sigma_ref must be positive");
    const Plane& green = img.green;

    int k = median_kernel_for_height(green.height);
    Plane background = median_filter(green, k);

    Plane residual(green.width, green.height);
    for (std::size_t i = 0; i < green.data.size(); ++i)
        residual.data[i] = green.data[i] - background.data[i];

    double mu = plane_mean(residual);
    double sigma = plane_std(residual);
    if (sigma < 1e-12) {
        return Plane(green.width, green.height, params.mu_ref);
    }
    double scale = params.sigma_ref / sigma;
    for (double& v : residual.data) v = (v - mu) * scale + params.mu_ref;
    return residual;
}

RgbImage prepare_channels(const RgbImage& img, const NormalizationParams& params) {
    img.check();
    RgbImage out;
    out.red = img.red;
    out.green = normalize_green(img, params);
    out.blue = img.blue;
    return out;
}

}  // namespace rbow
