#include "retinabow/surf.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace rbow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;

double haar_x(const IntegralImage& ii, int x, int y, int size) {
    int h = size / 2;
    return ii.box_sum(x, y - h, h, size) - ii.box_sum(x - h, y - h, h, size);
}

double haar_y(const IntegralImage& ii, int x, int y, int size) {
    int h = size / 2;
    return ii.box_sum(x - h, y, size, h) - ii.box_sum(x - h, y - h, size, h);
}

int iround(double v) { return static_cast<int>(std::lround(v)); }

struct Vec3 {
    double x, y, z;
};

// Solve the symmetric 3x3 system A d = -g by Cramer's rule; false when A is
// numerically singular.
bool solve_offset(const double a[3][3], const Vec3& g, Vec3& d) {
    double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (std::abs(det) < 1e-30) return false;
    double inv = 1.0 / det;
    double b0 = -g.x, b1 = -g.y, b2 = -g.z;
    d.x = inv * (b0 * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (b1 * a[2][2] - a[1][2] * b2) +
                 a[0][2] * (b1 * a[2][1] - a[1][1] * b2));
    d.y = inv * (a[0][0] * (b1 * a[2][2] - a[1][2] * b2) -
                 b0 * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * b2 - b1 * a[2][0]));
    d.z = inv * (a[0][0] * (a[1][1] * b2 - b1 * a[2][1]) -
                 a[0][1] * (a[1][0] * b2 - b1 * a[2][0]) +
                 b0 * (a[1][0] * a[2][1] - a[1][1] * a[2][0]));
    return true;
}

}  // namespace

int surf_filter_size(int octave, int interval) {
    return 3 * ((interval + 1) * (1 << (octave + 1)) + 1);
}

Plane hessian_response(const IntegralImage& ii, int filter_size) {
    if (filter_size < 9 || filter_size % 6 != 3)
        throw std::invalid_argument("hessian_response: filter size must be 9, 15, 21, ... (3 mod 6)");
    const int w = ii.width();
    const int h = ii.height();
    const int lobe = filter_size / 3;
    const int half = filter_size / 2;
    const int l6 = filter_size / 6;
    const double inv_area = 1.0 / (static_cast<double>(filter_size) * filter_size);

    Plane out(w, h);
    // Responses only where the whole filter fits; the margin stays zero so a
    // constant image yields a zero map even at the borders.
    for (int y = half; y < h - half; ++y) {
        for (int x = half; x < w - half; ++x) {
            double dxx = ii.box_sum(x - half, y - lobe + 1, filter_size, 2 * lobe - 1) -
                         3.0 * ii.box_sum(x - l6, y - lobe + 1, 2 * l6 + 1, 2 * lobe - 1);
            double dyy = ii.box_sum(x - lobe + 1, y - half, 2 * lobe - 1, filter_size) -
                         3.0 * ii.box_sum(x - lobe + 1, y - l6, 2 * lobe - 1, 2 * l6 + 1);
            double dxy = ii.box_sum(x + 1, y - lobe, lobe, lobe) +
                         ii.box_sum(x - lobe, y + 1, lobe, lobe) -
                         ii.box_sum(x - lobe, y - lobe, lobe, lobe) -
                         ii.box_sum(x + 1, y + 1, lobe, lobe);
            dxx *= inv_area;
            dyy *= inv_area;
            dxy *= inv_area;
            out.at(x, y) = dxx * dyy - 0.81 * dxy * dxy;
        }
    }
    return out;
}

std::vector<Keypoint> detect_keypoints(const Plane& plane, const HessianConfig& cfg) {
    if (cfg.octaves < 1 || cfg.intervals < 3) throw std::invalid_argument("detect_keypoints: bad config");
    std::vector<Keypoint> keypoints;
    const int w = plane.width;
    const int h = plane.height;
    if (w < 3 || h < 3) return keypoints;

    IntegralImage ii(plane);
    std::map<int, Plane> responses;
    auto response = [&](int size) -> const Plane& {
        auto it = responses.find(size);
        if (it == responses.end()) it = responses.emplace(size, hessian_response(ii, size)).first;
        return it->second;
    };

    for (int o = 0; o < cfg.octaves; ++o) {
        int largest = surf_filter_size(o, cfg.intervals - 1);
        if (2 * largest > std::min(w, h)) break;
        const int delta = 3 * (1 << (o + 1));  // filter-size spacing within the octave

        for (int i = 1; i + 1 < cfg.intervals; ++i) {
            const Plane& below = response(surf_filter_size(o, i - 1));
            const Plane& mid = response(surf_filter_size(o, i));
            const Plane& above = response(surf_filter_size(o, i + 1));
            const int size = surf_filter_size(o, i);

            for (int y = 1; y + 1 < h; ++y) {
                for (int x = 1; x + 1 < w; ++x) {
                    double r0 = mid.at(x, y);
                    if (r0 <= cfg.threshold) continue;

                    bool is_max = true;
                    for (int dy = -1; dy <= 1 && is_max; ++dy) {
                        for (int dx = -1; dx <= 1 && is_max; ++dx) {
                            if (r0 <= below.at(x + dx, y + dy)) is_max = false;
                            else if (r0 <= above.at(x + dx, y + dy)) is_max = false;
                            else if ((dx || dy) && r0 <= mid.at(x + dx, y + dy)) is_max = false;
                        }
                    }
                    if (!is_max) continue;

                    Keypoint kp;
                    kp.response = r0;
                    if (cfg.subpixel_refine) {
                        Vec3 g{(mid.at(x + 1, y) - mid.at(x - 1, y)) / 2.0,
                               (mid.at(x, y + 1) - mid.at(x, y - 1)) / 2.0,
                               (above.at(x, y) - below.at(x, y)) / 2.0};
                        double H[3][3];
                        H[0][0] = mid.at(x + 1, y) - 2.0 * r0 + mid.at(x - 1, y);
                        H[1][1] = mid.at(x, y + 1) - 2.0 * r0 + mid.at(x, y - 1);
                        H[2][2] = above.at(x, y) - 2.0 * r0 + below.at(x, y);
                        H[0][1] = H[1][0] = (mid.at(x + 1, y + 1) - mid.at(x - 1, y + 1) -
                                             mid.at(x + 1, y - 1) + mid.at(x - 1, y - 1)) / 4.0;
                        H[0][2] = H[2][0] = (above.at(x + 1, y) - above.at(x - 1, y) -
                                             below.at(x + 1, y) + below.at(x - 1, y)) / 4.0;
                        H[1][2] = H[2][1] = (above.at(x, y + 1) - above.at(x, y - 1) -
                                             below.at(x, y + 1) + below.at(x, y - 1)) / 4.0;
                        Vec3 d;
                        if (!solve_offset(H, g, d)) continue;
                        if (std::abs(d.x) > 0.5 || std::abs(d.y) > 0.5 || std::abs(d.z) > 0.5) continue;
                        kp.x = x + d.x;
                        kp.y = y + d.y;
                        kp.sigma = 1.2 * (size + d.z * delta) / 9.0;
                    } else {
                        kp.x = x;
                        kp.y = y;
                        kp.sigma = 1.2 * size / 9.0;
                    }
                    keypoints.push_back(kp);
                }
            }
        }
    }
    return keypoints;
}

double assign_orientation(const IntegralImage& ii, const Keypoint& kp) {
    const int s = std::max(1, iround(kp.sigma));
    const int cx = iround(kp.x);
    const int cy = iround(kp.y);
    const int margin = 8 * s;  // 6s sample radius + 2s haar half-width
    if (cx - margin < 0 || cx + margin > ii.width() || cy - margin < 0 || cy + margin > ii.height())
        return 0.0;

    std::vector<double> res_x, res_y, res_ang;
    for (int j = -6; j <= 6; ++j) {
        for (int i = -6; i <= 6; ++i) {
            if (i * i + j * j >= 36) continue;
            double g = std::exp(-(i * i + j * j) / (2.0 * 2.5 * 2.5));
            double rx = g * haar_x(ii, cx + i * s, cy + j * s, 4 * s);
            double ry = g * haar_y(ii, cx + i * s, cy + j * s, 4 * s);
            res_x.push_back(rx);
            res_y.push_back(ry);
            double a = std::atan2(ry, rx);
            res_ang.push_back(a < 0.0 ? a + kTwoPi : a);
        }
    }

    double best_norm2 = 0.0;
    double best_x = 0.0, best_y = 0.0;
    for (double ang1 = 0.0; ang1 < kTwoPi; ang1 += 0.15) {
        double sum_x = 0.0, sum_y = 0.0;
        for (std::size_t n = 0; n < res_ang.size(); ++n) {
            double d = res_ang[n] - ang1;
            if (d < 0.0) d += kTwoPi;
            if (d < kPi / 3.0) {
                sum_x += res_x[n];
                sum_y += res_y[n];
            }
        }
        double norm2 = sum_x * sum_x + sum_y * sum_y;
        if (norm2 > best_norm2) {
            best_norm2 = norm2;
            best_x = sum_x;
            best_y = sum_y;
        }
    }
    if (best_norm2 < 1e-24) return 0.0;
    double theta = std::atan2(best_y, best_x);
    if (theta < 0.0) theta += kTwoPi;
    return theta;
}

std::optional<SurfDescriptor> describe(const IntegralImage& ii, const Keypoint& kp, bool upright) {
    if (kp.sigma <= 0.0) throw std::invalid_argument("describe: sigma must be positive");
    const double sigma = kp.sigma;
    const int s = std::max(1, iround(sigma));
    const int haar = 2 * s;
    const double co = upright ? 1.0 : std::cos(kp.orientation);
    const double si = upright ? 0.0 : std::sin(kp.orientation);
    const double gauss_denom = 2.0 * (3.3 * sigma) * (3.3 * sigma);

    SurfDescriptor desc{};
    for (int kv = 0; kv < 20; ++kv) {
        const double v = (kv - 9.5) * sigma;
        const int sv = kv / 5;
        for (int ku = 0; ku < 20; ++ku) {
            const double u = (ku - 9.5) * sigma;
            const int su = ku / 5;

            int sx = iround(kp.x + u * co - v * si);
            int sy = iround(kp.y + u * si + v * co);
            double dx = haar_x(ii, sx, sy, haar);
            double dy = haar_y(ii, sx, sy, haar);
            double g = std::exp(-(u * u + v * v) / gauss_denom);
            double rdx = g * (dx * co + dy * si);
            double rdy = g * (-dx * si + dy * co);

            double* bin = desc.data() + (sv * 4 + su) * 4;
            bin[0] += rdx;
            bin[1] += rdy;
            bin[2] += std::abs(rdx);
            bin[3] += std::abs(rdy);
        }
    }

    double norm2 = 0.0;
    for (double v : desc) norm2 += v * v;
    if (norm2 < 1e-24) return std::nullopt;
    double inv = 1.0 / std::sqrt(norm2);
    for (double& v : desc) v *= inv;
    return desc;
}

FeatureMatrix sparse_surf(const RgbImage& img, const HessianConfig& cfg) {
    img.check();
    const Plane* planes[3] = {&img.red, &img.green, &img.blue};
    FeatureMatrix out(kSurfDim, 0, DescriptorKind::Surf);
    for (const Plane* plane : planes) {
        IntegralImage ii(*plane);
        for (Keypoint kp : detect_keypoints(*plane, cfg)) {
            kp.orientation = assign_orientation(ii, kp);
            auto desc = describe(ii, kp, false);
            if (desc) out.push_col(std::vector<double>(desc->begin(), desc->end()));
        }
    }
    if (out.cols == 0) throw std::runtime_error("sparse_surf: no keypoints in any channel");
    return out;
}

FeatureMatrix dense_surf(const RgbImage& img) {
    img.check();
    constexpr double kSigma = 1.6;
    constexpr int kGrid = 16;
    const int s = std::max(1, iround(kSigma));
    const int margin = iround(9.5 * kSigma) + s;  // farthest sample + haar half-width

    const Plane* planes[3] = {&img.red, &img.green, &img.blue};
    IntegralImage integrals[3] = {IntegralImage(*planes[0]), IntegralImage(*planes[1]),
                                  IntegralImage(*planes[2])};

    FeatureMatrix out(3 * kSurfDim, 0, DescriptorKind::Dsurf);
    std::vector<double> column(3 * kSurfDim);
    for (int cy = kGrid / 2; cy < img.height(); cy += kGrid) {
        if (cy - margin < 0 || cy + margin > img.height()) continue;
        for (int cx = kGrid / 2; cx < img.width(); cx += kGrid) {
            if (cx - margin < 0 || cx + margin > img.width()) continue;

            Keypoint kp;
            kp.x = cx;
            kp.y = cy;
            kp.sigma = kSigma;
            bool ok = true;
            for (int c = 0; c < 3 && ok; ++c) {
                auto desc = describe(integrals[c], kp, true);
                if (!desc) ok = false;
                else std::copy(desc->begin(), desc->end(), column.begin() + c * kSurfDim);
            }
            if (ok) out.push_col(column);
        }
    }
    if (out.cols == 0) throw std::runtime_error("dense_surf: no valid patches");
    return out;
}

}  // namespace rbow
