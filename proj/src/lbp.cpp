#include "retinabow/lbp.hpp"

namespace rbow {

namespace {

// Clockwise from top-left within a row-major 3x3 window
// (0 1 2 / 3 4 5 / 6 7 8): TL T TR R BR B BL L.
constexpr int kClockwise[8] = {0, 1, 2, 5, 8, 7, 6, 3};

}  // namespace

int lbp_code(const std::array<double, 9>& window) {
    const double center = window[4];
    int code = 0;
    for (int p = 0; p < 8; ++p) {
        if (window[kClockwise[p]] >= center) code |= 1 << p;
    }
    return code;
}

int circular_transitions(int code) {
    int transitions = 0;
    for (int p = 0; p < 8; ++p) {
        int a = (code >> p) & 1;
        int b = (code >> ((p + 1) % 8)) & 1;
        if (a != b) ++transitions;
    }
    return transitions;
}

const UniformTable& uniform_table() {
    static const UniformTable table = [] {
        UniformTable t{};
        int next = 0;
        for (int code = 0; code < 256; ++code) {
            t[code] = circular_transitions(code) <= 2 ? next++ : kLbpNonUniform;
        }
        return t;
    }();
    return table;
}

std::optional<std::array<double, kLbpBins>> lbp_patch_histogram(const Plane& plane, int px, int py) {
    double peak = 0.0;
    for (int y = py; y < py + kLbpPatchSize; ++y)
        for (int x = px; x < px + kLbpPatchSize; ++x) peak = std::max(peak, plane.at(x, y));
    if (peak < 1e-6) return std::nullopt;

    const UniformTable& table = uniform_table();
    std::array<double, kLbpBins> hist{};
    long count = 0;
    for (int y = py + 1; y < py + kLbpPatchSize - 1; ++y) {
        for (int x = px + 1; x < px + kLbpPatchSize - 1; ++x) {
            const double center = plane.at(x, y);
            int code = 0;
            if (plane.at(x - 1, y - 1) >= center) code |= 1;
            if (plane.at(x, y - 1) >= center) code |= 2;
            if (plane.at(x + 1, y - 1) >= center) code |= 4;
            if (plane.at(x + 1, y) >= center) code |= 8;
            if (plane.at(x + 1, y + 1) >= center) code |= 16;
            if (plane.at(x, y + 1) >= center) code |= 32;
            if (plane.at(x - 1, y + 1) >= center) code |= 64;
            if (plane.at(x - 1, y) >= center) code |= 128;
            int bin = table[code];
            if (bin != kLbpNonUniform) {
                hist[bin] += 1.0;
                ++count;
            }
        }
    }
    if (count == 0) return std::nullopt;
    const double inv = 1.0 / count;
    for (double& v : hist) v *= inv;
    return hist;
}

FeatureMatrix lbp_image(const RgbImage& img) {
    img.check();
    if (img.width() < kLbpPatchSize || img.height() < kLbpPatchSize)
        throw std::runtime_error("lbp_image: image smaller than one patch");

    const Plane* planes[3] = {&img.red, &img.green, &img.blue};
    FeatureMatrix out(3 * kLbpBins, 0, DescriptorKind::Lbp);
    std::vector<double> column(3 * kLbpBins);
    for (int py = 0; py + kLbpPatchSize <= img.height(); py += kLbpPatchSize) {
        for (int px = 0; px + kLbpPatchSize <= img.width(); px += kLbpPatchSize) {
            bool any = false;
            std::fill(column.begin(), column.end(), 0.0);
            for (int c = 0; c < 3; ++c) {
                auto hist = lbp_patch_histogram(*planes[c], px, py);
                if (hist) {
                    any = true;
                    std::copy(hist->begin(), hist->end(), column.begin() + c * kLbpBins);
                }
            }
            if (any) out.push_col(column);
        }
    }
    if (out.cols == 0) throw std::runtime_error("lbp_image: no valid patches");
    return out;
}

}  // namespace rbow
