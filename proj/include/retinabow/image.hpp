#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rbow {

/// 2-D scalar grid, row-major. Values are real; loaded images live in [0,1],
/// normalized planes may exceed that range.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0);

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

/// Three planes of identical dimensions.
struct RgbImage {
    Plane red;
    Plane green;
    Plane blue;

    int width() const { return red.width; }
    int height() const { return red.height; }
    void check() const;
};

/// Cumulative-sum grid over a Plane; entry (x,y) holds the sum of all source
/// pixels with coordinates strictly below (x,y). Rectangle sums cost four
/// lookups and three arithmetic ops.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const Plane& p);

    int width() const { return width_; }
    int height() const { return height_; }

    // Sum of source pixels in [x, x+w) x [y, y+h). The rectangle is clipped
    // to the image bounds; a fully outside or empty rectangle sums to 0.
    double box_sum(int x, int y, int w, int h) const;

    double cumulative(int x, int y) const { return sums_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> sums_;  // (width+1) x (height+1)
};

IntegralImage integral_image(const Plane& p);

/// Bilinear resize of the whole image so that height == target, width scaled
/// by round(width * target / height). Exact pass-through when the height
/// already matches.
RgbImage resize_to_height(const RgbImage& img, int target = 512);
Plane resize_plane(const Plane& p, int out_width, int out_height);

/// k x k median with edge replication at the borders. k must be odd and >= 1.
Plane median_filter(const Plane& p, int k);

/// Median window size rule: round(height / 30), bumped to the next odd value.
int median_kernel_for_height(int height);

}  // namespace rbow
