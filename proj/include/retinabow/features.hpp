#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbow {

enum class DescriptorKind : std::uint8_t {
    Surf = 0,   // 64-dim sparse keypoint descriptors
    Dsurf = 1,  // 192-dim dense grid descriptors (64 per color channel)
    Hog = 2,    // 93-dim dense gradient descriptors (31 per color channel)
    Lbp = 3,    // 174-dim dense texture descriptors (58 per color channel)
};

int descriptor_dim(DescriptorKind kind);
std::string kind_name(DescriptorKind kind);
DescriptorKind kind_from_name(const std::string& name);

/// Column-major descriptor collection: entry (r, c) is component r of
/// descriptor c, stored at data[c * rows + r]. Columns are descriptors.
/// Extractors stamp `kind`; ad hoc matrices (tests, tools) may leave it at
/// the default, where rows need not match descriptor_dim(kind).
struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    DescriptorKind kind = DescriptorKind::Surf;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(int r, int c, DescriptorKind k = DescriptorKind::Surf)
        : rows(r), cols(c), kind(k), data(static_cast<std::size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("FeatureMatrix: negative dimensions");
    }

    double* col(int c) { return data.data() + static_cast<std::size_t>(c) * rows; }
    const double* col(int c) const { return data.data() + static_cast<std::size_t>(c) * rows; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(c) * rows + r]; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(c) * rows + r]; }

    void push_col(const std::vector<double>& v) {
        if (static_cast<int>(v.size()) != rows)
            throw std::invalid_argument("FeatureMatrix::push_col: length mismatch");
        data.insert(data.end(), v.begin(), v.end());
        ++cols;
    }
};

}  // namespace rbow
