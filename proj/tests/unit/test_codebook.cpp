#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "retinabow/codebook.hpp"

using namespace rbow;

namespace {

FeatureMatrix random_features(int dim, int n, std::uint64_t seed, double spread = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    FeatureMatrix f(dim, n);
    for (double& v : f.data) v = g(rng);
    return f;
}

double sq_dist(const double* a, const double* b, int dim) {
    double d = 0.0;
    for (int j = 0; j < dim; ++j) {
        double t = a[j] - b[j];
        d += t * t;
    }
    return d;
}

// exact optimum by enumerating all K^M assignments
double brute_force_objective(const FeatureMatrix& f, int k) {
    const int m = f.cols, dim = f.rows;
    std::vector<int> assign(m, 0);
    double best = std::numeric_limits<double>::infinity();
    const long long total = static_cast<long long>(std::pow(k, m));
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        for (int i = 0; i < m; ++i) {
            assign[i] = static_cast<int>(c % k);
            c /= k;
        }
        std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
        std::vector<int> count(k, 0);
        for (int i = 0; i < m; ++i) {
            ++count[assign[i]];
            for (int j = 0; j < dim; ++j) centroid[assign[i]][j] += f.at(j, i);
        }
        bool any_empty = false;
        for (int c2 = 0; c2 < k; ++c2) {
            if (count[c2] == 0) {
                any_empty = true;
                break;
            }
            for (int j = 0; j < dim; ++j) centroid[c2][j] /= count[c2];
        }
        if (any_empty) continue;
        double obj = 0.0;
        for (int i = 0; i < m; ++i) obj += sq_dist(f.col(i), centroid[assign[i]].data(), dim);
        best = std::min(best, obj);
    }
    return best;
}

}  // namespace

TEST_SUITE("codebook") {

TEST_CASE("k equal to the point count drives the objective to zero") {
    FeatureMatrix f = random_features(3, 12, 5);
    auto [cb, a] = kmeans(f, 12);
    CHECK(cb.objective <= 1e-18);
    std::vector<int> seen(a.begin(), a.end());
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < 12; ++i) CHECK(seen[i] == i);
}

TEST_CASE("k = 1 recovers the mean") {
    FeatureMatrix f = random_features(4, 50, 6);
    auto [cb, a] = kmeans(f, 1);
    for (int j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (int i = 0; i < 50; ++i) mean += f.at(j, i);
        mean /= 50;
        CHECK(cb.word(0)[j] == doctest::Approx(mean).epsilon(1e-9));
    }
    double expect = 0.0;
    for (int i = 0; i < 50; ++i) expect += sq_dist(f.col(i), cb.word(0), 4);
    CHECK(cb.objective == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("small instances reach the brute-force optimum") {
    KmeansConfig cfg;
    cfg.restarts = 40;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int m = 8 + static_cast<int>(seed % 5);
        const int k = 2 + static_cast<int>(seed % 2);
        FeatureMatrix f = random_features(2, m, 100 + seed);
        cfg.seed = seed + 1;
        auto [cb, a] = kmeans(f, k, cfg);
        const double opt = brute_force_objective(f, k);
        CHECK(cb.objective >= opt - 1e-9);
        CHECK(cb.objective <= opt + 1e-6 * (1.0 + opt));
    }
}

TEST_CASE("objective does not increase with K") {
    FeatureMatrix f = random_features(5, 120, 9);
    KmeansConfig cfg;
    cfg.restarts = 5;
    double prev = std::numeric_limits<double>::infinity();
    for (int k : {1, 2, 4, 8, 16}) {
        auto [cb, a] = kmeans(f, k, cfg);
        CHECK(cb.objective <= prev + 1e-9);
        prev = cb.objective;
    }
}

TEST_CASE("same seed gives bitwise identical codebooks") {
    FeatureMatrix f = random_features(6, 200, 10);
    KmeansConfig cfg;
    cfg.seed = 77;
    auto [cb1, a1] = kmeans(f, 9, cfg);
    auto [cb2, a2] = kmeans(f, 9, cfg);
    CHECK(cb1.words == cb2.words);
    CHECK(cb1.objective == cb2.objective);
    CHECK(a1 == a2);
}

TEST_CASE("assignments point to the nearest word") {
    FeatureMatrix f = random_features(3, 80, 12);
    auto [cb, a] = kmeans(f, 5);
    for (int i = 0; i < f.cols; ++i) {
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cb.k; ++c) {
            double d = sq_dist(f.col(i), cb.word(c), 3);
            if (d < best) {
                best = d;
                nearest = c;
            }
        }
        CHECK(a[i] == nearest);
    }
}

TEST_CASE("converged words are the means of their clusters") {
    FeatureMatrix f = random_features(4, 120, 21);
    auto [cb, a] = kmeans(f, 6);
    std::vector<std::vector<double>> mean(6, std::vector<double>(4, 0.0));
    std::vector<int> count(6, 0);
    for (int i = 0; i < f.cols; ++i) {
        ++count[a[i]];
        for (int j = 0; j < 4; ++j) mean[a[i]][j] += f.at(j, i);
    }
    for (int c = 0; c < 6; ++c) {
        REQUIRE(count[c] > 0);
        for (int j = 0; j < 4; ++j)
            CHECK(cb.word(c)[j] == doctest::Approx(mean[c][j] / count[c]).epsilon(1e-9));
    }
}

TEST_CASE("input validation") {
    FeatureMatrix f = random_features(2, 5, 1);
    CHECK_THROWS_AS(kmeans(f, 6), std::invalid_argument);
    CHECK_THROWS_AS(kmeans(f, 0), std::invalid_argument);
    FeatureMatrix bad = f;
    bad.data[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(kmeans(bad, 2), std::invalid_argument);
}

TEST_CASE("dictionary building pools training images, with an optional cap") {
    std::vector<FeatureMatrix> train;
    for (int i = 0; i < 4; ++i) {
        FeatureMatrix f = random_features(descriptor_dim(DescriptorKind::Hog), 9, 30 + i);
        f.kind = DescriptorKind::Hog;
        train.push_back(std::move(f));
    }
    Codebook cb = build_single_dictionary(train, DescriptorKind::Hog, 6);
    CHECK(cb.k == 6);
    CHECK(cb.dim == 93);
    CHECK(cb.kind == DescriptorKind::Hog);

    Codebook capped = build_single_dictionary(train, DescriptorKind::Hog, 6, {}, 3);
    CHECK(capped.k == 6);
    // 4 images x cap 3 = 12 pooled columns; asking for more words than that throws
    CHECK_THROWS_AS(build_single_dictionary(train, DescriptorKind::Hog, 13, {}, 3),
                    std::invalid_argument);

    train[1].kind = DescriptorKind::Lbp;
    CHECK_THROWS_AS(build_single_dictionary(train, DescriptorKind::Hog, 3), std::invalid_argument);
}

}  // TEST_SUITE
