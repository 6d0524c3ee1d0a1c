#include "retinabow/hog.hpp"

#include <cmath>

namespace rbow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kClip = 0.2;
constexpr double kTextureScale = 0.2357;  // 1/sqrt(18)
constexpr double kEnergyEps = 1e-12;

}  // namespace

HogCell hog_cell(const GradientField& g, int cx, int cy) {
    HogCell cell;
    const double bin_width = kTwoPi / kHogSignedBins;
    for (int y = cy; y < cy + kHogCellSize; ++y) {
        for (int x = cx; x < cx + kHogCellSize; ++x) {
            double m = g.magnitude.at(x, y);
            if (m == 0.0) continue;
            // Bin centers at (i + 0.5) * bin_width; split mass between the
            // two bracketing bins.
            double u = g.orientation.at(x, y) / bin_width - 0.5;
            int i0 = static_cast<int>(std::floor(u));
            double w = u - i0;
            int b0 = ((i0 % kHogSignedBins) + kHogSignedBins) % kHogSignedBins;
            int b1 = (b0 + 1) % kHogSignedBins;
            cell.signed_bins[b0] += m * (1.0 - w);
            cell.signed_bins[b1] += m * w;
        }
    }
    for (int j = 0; j < kHogUnsignedBins; ++j) {
        cell.unsigned_bins[j] = cell.signed_bins[j] + cell.signed_bins[j + kHogUnsignedBins];
        cell.energy += cell.unsigned_bins[j] * cell.unsigned_bins[j];
    }
    return cell;
}

GradientField gradient(const Plane& p) {
    if (p.width < 3 || p.height < 3) throw std::invalid_argument("gradient: plane must be at least 3x3");
    GradientField g{Plane(p.width, p.height), Plane(p.width, p.height)};
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double gx, gy;
            if (x == 0)
                gx = p.at(1, y) - p.at(0, y);
            else if (x == p.width - 1)
                gx = p.at(x, y) - p.at(x - 1, y);
            else
                gx = 0.5 * (p.at(x + 1, y) - p.at(x - 1, y));
            if (y == 0)
                gy = p.at(x, 1) - p.at(x, 0);
            else if (y == p.height - 1)
                gy = p.at(x, y) - p.at(x, y - 1);
            else
                gy = 0.5 * (p.at(x, y + 1) - p.at(x, y - 1));
            g.magnitude.at(x, y) = std::sqrt(gx * gx + gy * gy);
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += kTwoPi;
            if (theta >= kTwoPi) theta = 0.0;
            g.orientation.at(x, y) = theta;
        }
    }
    return g;
}

std::optional<std::array<double, kHogBlockDim>> hog_block(const GradientField& g, int bx, int by) {
    HogCell cells[4];
    double total_energy = 0.0;
    for (int cy = 0; cy < 2; ++cy) {
        for (int cx = 0; cx < 2; ++cx) {
            cells[cy * 2 + cx] = hog_cell(g, bx + cx * kHogCellSize, by + cy * kHogCellSize);
            total_energy += cells[cy * 2 + cx].energy;
        }
    }
    if (total_energy < kEnergyEps) return std::nullopt;

    double norm[4];
    for (int k = 0; k < 4; ++k) norm[k] = 1.0 / std::sqrt(cells[k].energy + kEnergyEps);

    std::array<double, kHogBlockDim> feature{};
    for (const HogCell& cell : cells) {
        double cell_feature[kHogBlockDim] = {};
        for (int k = 0; k < 4; ++k) {
            double t = 0.0;
            for (int o = 0; o < kHogSignedBins; ++o) {
                double h = std::min(cell.signed_bins[o] * norm[k], kClip);
                cell_feature[o] += 0.5 * h;
                t += h;
            }
            for (int o = 0; o < kHogUnsignedBins; ++o) {
                double h = std::min(cell.unsigned_bins[o] * norm[k], kClip);
                cell_feature[kHogSignedBins + o] += 0.5 * h;
            }
            cell_feature[kHogSignedBins + kHogUnsignedBins + k] = kTextureScale * t;
        }
        for (int d = 0; d < kHogBlockDim; ++d) feature[d] += 0.25 * cell_feature[d];
    }
    return feature;
}

FeatureMatrix hog_image(const RgbImage& img) {
    img.check();
    if (img.width() < kHogBlockSize || img.height() < kHogBlockSize)
        throw std::runtime_error("hog_image: image smaller than one block");

    const GradientField fields[3] = {gradient(img.red), gradient(img.green), gradient(img.blue)};
    FeatureMatrix out(3 * kHogBlockDim, 0, DescriptorKind::Hog);
    std::vector<double> column(3 * kHogBlockDim);
    for (int by = 0; by + kHogBlockSize <= img.height(); by += kHogBlockSize) {
        for (int bx = 0; bx + kHogBlockSize <= img.width(); bx += kHogBlockSize) {
            bool any = false;
            std::fill(column.begin(), column.end(), 0.0);
            for (int c = 0; c < 3; ++c) {
                auto feature = hog_block(fields[c], bx, by);
                if (feature) {
                    any = true;
                    std::copy(feature->begin(), feature->end(), column.begin() + c * kHogBlockDim);
                }
            }
            if (any) out.push_col(column);
        }
    }
    if (out.cols == 0) throw std::runtime_error("hog_image: no non-empty blocks");
    return out;
}

}  // namespace rbow
