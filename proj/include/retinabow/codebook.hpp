#pragma once

#include <cstdint>
#include <vector>

#include "retinabow/features.hpp"

namespace rbow {

struct Codebook {
    DescriptorKind kind = DescriptorKind::Surf;
    int k = 0;
    int dim = 0;
    std::vector<double> words;  // k x dim, row-major (word k at words.data() + k*dim)
    double objective = 0.0;     // final quantization error H
    std::uint64_t seed = 0;

    const double* word(int i) const { return words.data() + static_cast<std::size_t>(i) * dim; }
};

using Assignment = std::vector<int>;

struct KmeansConfig {
    int max_iterations = 300;
    double tolerance = 1e-6;  // relative objective decrease
    int restarts = 3;
    std::uint64_t seed = 1;
    // Diagnostics: when set, every restart appends its per-iteration
    // objective sequence (seed objective first).
    std::vector<std::vector<double>>* trace = nullptr;
};

/// Lloyd iterations from k-means++ seeds; squared-Euclidean distances, ties
/// to the lowest word index, empty clusters re-seeded from the globally
/// worst-quantized point. Best of cfg.restarts runs is returned, together
/// with the nearest-word assignment under the returned words.
std::pair<Codebook, Assignment> kmeans(const FeatureMatrix& features, int k, const KmeansConfig& cfg = {});

/// Pool columns across training images (manifest order) and run kmeans.
/// max_per_image > 0 caps each image's contribution to that many columns,
/// taken evenly spaced across the image's descriptors.
Codebook build_single_dictionary(const std::vector<FeatureMatrix>& train, DescriptorKind kind, int k,
                                 const KmeansConfig& cfg = {}, int max_per_image = 0);

/// One independent codebook per kind at the same K. per_kind_train[i] holds
/// every training image's matrix for kinds[i].
std::vector<Codebook> build_multiple_dictionaries(
    const std::vector<std::vector<FeatureMatrix>>& per_kind_train,
    const std::vector<DescriptorKind>& kinds, int k, const KmeansConfig& cfg = {},
    int max_per_image = 0);

}  // namespace rbow
