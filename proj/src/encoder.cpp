#include "retinabow/encoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbow {

Assignment assign(const FeatureMatrix& features, const Codebook& cb) {
    if (features.rows != cb.dim) throw std::invalid_argument("assign: feature/codebook dimension mismatch");
    if (features.cols < 1) throw std::invalid_argument("assign: empty feature matrix");

    Assignment out(features.cols);
    for (int i = 0; i < features.cols; ++i) {
        const double* x = features.col(i);
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (int c = 0; c < cb.k; ++c) {
            const double* w = cb.word(c);
            double d = 0.0;
            for (int j = 0; j < cb.dim; ++j) {
                double t = x[j] - w[j];
                d += t * t;
            }
            if (d < best) {
                best = d;
                best_k = c;
            }
        }
        out[i] = best_k;
    }
    return out;
}

BowHistogram pool(const Assignment& a, int k) {
    if (a.empty()) throw std::invalid_argument("pool: empty assignment");
    BowHistogram h;
    h.values.assign(k, 0.0);
    for (int idx : a) {
        if (idx < 0 || idx >= k) throw std::invalid_argument("pool: assignment index out of range");
        h.values[idx] += 1.0;
    }
    double norm2 = 0.0;
    for (double v : h.values) norm2 += v * v;
    double inv = 1.0 / std::sqrt(norm2);
    for (double& v : h.values) v *= inv;
    return h;
}

BowHistogram encode_single(const FeatureMatrix& features, const Codebook& cb) {
    BowHistogram h = pool(assign(features, cb), cb.k);
    h.multiple = false;
    h.kind = cb.kind;
    return h;
}

BowHistogram encode_multiple(const std::map<DescriptorKind, FeatureMatrix>& features,
                             const std::vector<Codebook>& codebooks) {
    if (codebooks.empty()) throw std::invalid_argument("encode_multiple: no codebooks");
    BowHistogram h;
    h.multiple = true;
    for (const Codebook& cb : codebooks) {
        auto it = features.find(cb.kind);
        if (it == features.end())
            throw std::invalid_argument("encode_multiple: missing features for kind " + kind_name(cb.kind));
        BowHistogram part = encode_single(it->second, cb);
        h.values.insert(h.values.end(), part.values.begin(), part.values.end());
    }
    return h;
}

}  // namespace rbow
