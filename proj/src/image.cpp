#include "retinabow/image.hpp"

#include <algorithm>
#include <cmath>

namespace rbow {

Plane::Plane(int w, int h, double fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("Plane: negative dimensions");
}

void RgbImage::check() const {
    if (green.width != red.width || green.height != red.height ||
        blue.width != red.width || blue.height != red.height) {
        throw std::invalid_argument("RgbImage: plane dimensions differ");
    }
}

IntegralImage::IntegralImage(const Plane& p) : width_(p.width), height_(p.height) {
    sums_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0.0);
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        const double* src = p.data.data() + static_cast<std::size_t>(y) * width_;
        const double* above = sums_.data() + static_cast<std::size_t>(y) * (width_ + 1);
        double* out = sums_.data() + static_cast<std::size_t>(y + 1) * (width_ + 1);
        for (int x = 0; x < width_; ++x) {
            row += src[x];
            out[x + 1] = above[x + 1] + row;
        }
    }
}

double IntegralImage::box_sum(int x, int y, int w, int h) const {
    int x0 = std::clamp(x, 0, width_);
    int y0 = std::clamp(y, 0, height_);
    int x1 = std::clamp(x + w, 0, width_);
    int y1 = std::clamp(y + h, 0, height_);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    return cumulative(x1, y1) - cumulative(x0, y1) - cumulative(x1, y0) + cumulative(x0, y0);
}

IntegralImage integral_image(const Plane& p) { return IntegralImage(p); }

Plane resize_plane(const Plane& p, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0) throw std::invalid_argument("resize_plane: bad target size");
    if (out_width == p.width && out_height == p.height) return p;

    Plane out(out_width, out_height);
    const double sx = static_cast<double>(p.width) / out_width;
    const double sy = static_cast<double>(p.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int ya = std::clamp(y0, 0, p.height - 1);
        int yb = std::clamp(y0 + 1, 0, p.height - 1);
        for (int x = 0; x < out_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int xa = std::clamp(x0, 0, p.width - 1);
            int xb = std::clamp(x0 + 1, 0, p.width - 1);
            double top = p.at(xa, ya) * (1.0 - wx) + p.at(xb, ya) * wx;
            double bot = p.at(xa, yb) * (1.0 - wx) + p.at(xb, yb) * wx;
            out.at(x, y) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

RgbImage resize_to_height(const RgbImage& img, int target) {
    img.check();
    if (img.height() <= 0) throw std::invalid_argument("resize_to_height: empty image");
    if (img.height() == target) return img;
    int out_w = static_cast<int>(std::lround(
        static_cast<double>(img.width()) * target / img.height()));
    out_w = std::max(out_w, 1);
    RgbImage out;
    out.red = resize_plane(img.red, out_w, target);
    out.green = resize_plane(img.green, out_w, target);
    out.blue = resize_plane(img.blue, out_w, target);
    return out;
}

int median_kernel_for_height(int height) {
    int k = static_cast<int>(std::lround(height / 30.0));
    if (k < 1) k = 1;
    if (k % 2 == 0) ++k;
    return k;
}

Plane median_filter(const Plane& p, int k) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("median_filter: kernel must be odd and >= 1");
    if (k == 1) return p;

    Plane out(p.width, p.height);
    const int r = k / 2;
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(k) * k);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            window.clear();
            for (int dy = -r; dy <= r; ++dy) {
                int yy = std::clamp(y + dy, 0, p.height - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    int xx = std::clamp(x + dx, 0, p.width - 1);
                    window.push_back(p.at(xx, yy));
                }
            }
            auto mid = window.begin() + window.size() / 2;
            std::nth_element(window.begin(), mid, window.end());
            out.at(x, y) = *mid;
        }
    }
    return out;
}

}  // namespace rbow
