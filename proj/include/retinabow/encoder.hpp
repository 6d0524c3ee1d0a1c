#pragma once

#include <map>

#include "retinabow/codebook.hpp"
#include "retinabow/features.hpp"

namespace rbow {

struct BowHistogram {
    std::vector<double> values;  // length K (single) or 3K (multiple)
    bool multiple = false;
    DescriptorKind kind = DescriptorKind::Surf;  // meaningful in single mode
};

/// Exact nearest-word index per column, ties to the lowest index.
Assignment assign(const FeatureMatrix& features, const Codebook& cb);

/// Word-occurrence counts divided by sqrt(sum of squared counts): unit L2.
BowHistogram pool(const Assignment& a, int k);

/// Single mode: assign+pool against one codebook. Multiple mode: per-kind
/// assign+pool with each K-length segment independently L2-normalized, then
/// concatenated in codebook order.
BowHistogram encode_single(const FeatureMatrix& features, const Codebook& cb);
BowHistogram encode_multiple(const std::map<DescriptorKind, FeatureMatrix>& features,
                             const std::vector<Codebook>& codebooks);

}  // namespace rbow
