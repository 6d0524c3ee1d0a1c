#include "retinabow/codebook.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace rbow {

namespace {

// Deterministic uniform in [0,1) from raw engine output; avoids the
// implementation-defined std::uniform_real_distribution.
double unit_draw(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

double dist2(const double* a, const double* b, int dim) {
    double d = 0.0;
    for (int i = 0; i < dim; ++i) {
        double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

struct LloydResult {
    std::vector<double> centers;
    Assignment assignment;
    double objective = 0.0;
};

void seed_plus_plus(const FeatureMatrix& f, int k, std::mt19937_64& rng, std::vector<double>& centers) {
    const int dim = f.rows;
    const int m = f.cols;
    centers.assign(static_cast<std::size_t>(k) * dim, 0.0);

    int first = std::min(static_cast<int>(unit_draw(rng) * m), m - 1);
    std::copy(f.col(first), f.col(first) + dim, centers.begin());

    std::vector<double> best(m);
    for (int i = 0; i < m; ++i) best[i] = dist2(f.col(i), centers.data(), dim);

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : best) total += v;
        int pick;
        if (total <= 0.0) {
            pick = std::min(static_cast<int>(unit_draw(rng) * m), m - 1);
        } else {
            double r = unit_draw(rng) * total;
            double acc = 0.0;
            pick = m - 1;
            for (int i = 0; i < m; ++i) {
                acc += best[i];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
        }
        double* center = centers.data() + static_cast<std::size_t>(c) * dim;
        std::copy(f.col(pick), f.col(pick) + dim, center);
        for (int i = 0; i < m; ++i) best[i] = std::min(best[i], dist2(f.col(i), center, dim));
    }
}

double assign_nearest(const FeatureMatrix& f, const std::vector<double>& centers, int k,
                      Assignment& assignment, std::vector<double>& point_dist) {
    const int dim = f.rows;
    const int m = f.cols;
    double objective = 0.0;
    for (int i = 0; i < m; ++i) {
        const double* x = f.col(i);
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (int c = 0; c < k; ++c) {
            double d = dist2(x, centers.data() + static_cast<std::size_t>(c) * dim, dim);
            if (d < best) {
                best = d;
                best_k = c;
            }
        }
        assignment[i] = best_k;
        point_dist[i] = best;
        objective += best;
    }
    return objective;
}

LloydResult lloyd_run(const FeatureMatrix& f, int k, const KmeansConfig& cfg, std::uint64_t seed) {
    const int dim = f.rows;
    const int m = f.cols;
    std::mt19937_64 rng(seed);

    LloydResult r;
    seed_plus_plus(f, k, rng, r.centers);
    r.assignment.assign(m, 0);
    Assignment previous(m, -1);
    std::vector<double> point_dist(m);
    std::vector<int> counts(k);

    std::vector<double>* trace = nullptr;
    if (cfg.trace) {
        cfg.trace->emplace_back();
        trace = &cfg.trace->back();
    }

    r.objective = assign_nearest(f, r.centers, k, r.assignment, point_dist);
    if (trace) trace->push_back(r.objective);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        if (r.assignment == previous) break;
        previous = r.assignment;

        std::fill(r.centers.begin(), r.centers.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < m; ++i) {
            double* center = r.centers.data() + static_cast<std::size_t>(r.assignment[i]) * dim;
            const double* x = f.col(i);
            for (int d = 0; d < dim; ++d) center[d] += x[d];
            ++counts[r.assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double inv = 1.0 / counts[c];
            double* center = r.centers.data() + static_cast<std::size_t>(c) * dim;
            for (int d = 0; d < dim; ++d) center[d] *= inv;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Re-seed the empty cluster from the globally worst-quantized point.
            int worst = 0;
            for (int i = 1; i < m; ++i)
                if (point_dist[i] > point_dist[worst]) worst = i;
            std::copy(f.col(worst), f.col(worst) + dim,
                      r.centers.begin() + static_cast<std::size_t>(c) * dim);
            point_dist[worst] = 0.0;
        }

        double objective = assign_nearest(f, r.centers, k, r.assignment, point_dist);
        if (trace) trace->push_back(objective);
        bool converged = r.objective > 0.0 && (r.objective - objective) < cfg.tolerance * r.objective;
        r.objective = objective;
        if (converged) break;
    }
    return r;
}

FeatureMatrix pool_columns(const std::vector<FeatureMatrix>& train, DescriptorKind kind,
                           int max_per_image) {
    int dim = descriptor_dim(kind);
    FeatureMatrix pool(dim, 0, kind);
    for (const FeatureMatrix& f : train) {
        if (f.kind != kind) throw std::invalid_argument("pool_columns: descriptor kind mismatch");
        if (f.rows != dim) throw std::invalid_argument("pool_columns: descriptor dimension mismatch");
        if (max_per_image <= 0 || f.cols <= max_per_image) {
            pool.data.insert(pool.data.end(), f.data.begin(), f.data.end());
            pool.cols += f.cols;
        } else {
            for (int i = 0; i < max_per_image; ++i) {
                int c = static_cast<int>(static_cast<long long>(i) * f.cols / max_per_image);
                pool.data.insert(pool.data.end(), f.col(c), f.col(c) + dim);
            }
            pool.cols += max_per_image;
        }
    }
    return pool;
}

}  // namespace

std::pair<Codebook, Assignment> kmeans(const FeatureMatrix& features, int k, const KmeansConfig& cfg) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (features.cols < k) throw std::invalid_argument("kmeans: fewer features than clusters");
    if (cfg.max_iterations < 1 || cfg.restarts < 1 || cfg.tolerance < 0.0)
        throw std::invalid_argument("kmeans: bad config");
    for (double v : features.data)
        if (!std::isfinite(v)) throw std::invalid_argument("kmeans: non-finite feature value");

    std::mt19937_64 master(cfg.seed);
    LloydResult best;
    bool have = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        LloydResult run = lloyd_run(features, k, cfg, master());
        if (!have || run.objective < best.objective) {
            best = std::move(run);
            have = true;
        }
    }

    Codebook cb;
    cb.kind = features.kind;
    cb.k = k;
    cb.dim = features.rows;
    cb.words = std::move(best.centers);
    cb.objective = best.objective;
    cb.seed = cfg.seed;
    return {std::move(cb), std::move(best.assignment)};
}

Codebook build_single_dictionary(const std::vector<FeatureMatrix>& train, DescriptorKind kind, int k,
                                 const KmeansConfig& cfg, int max_per_image) {
    FeatureMatrix pool = pool_columns(train, kind, max_per_image);
    if (pool.cols < k) throw std::invalid_argument("build_single_dictionary: pooled feature count below K");
    return kmeans(pool, k, cfg).first;
}

std::vector<Codebook> build_multiple_dictionaries(
    const std::vector<std::vector<FeatureMatrix>>& per_kind_train,
    const std::vector<DescriptorKind>& kinds, int k, const KmeansConfig& cfg, int max_per_image) {
    if (per_kind_train.size() != kinds.size())
        throw std::invalid_argument("build_multiple_dictionaries: kinds/train size mismatch");
    std::vector<Codebook> books;
    books.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i)
        books.push_back(build_single_dictionary(per_kind_train[i], kinds[i], k, cfg, max_per_image));
    return books;
}

}  // namespace rbow
