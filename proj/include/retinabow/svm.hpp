#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace rbow {

struct BinarySvm {
    std::vector<double> w;
    double b = 0.0;
    double c = 0.0;
    // Solver diagnostics, not serialized.
    std::vector<double> alpha;
    double kkt_gap = 0.0;
    int iterations = 0;
};

struct SvmModel {
    std::vector<int> labels;                 // ascending class ids present in training
    std::vector<std::pair<int, int>> pairs;  // (positive class, negative class) per machine
    std::vector<BinarySvm> machines;
    int dim = 0;
    double bestc = 0.0;
};

struct CvConfig {
    int folds = 10;
    std::vector<double> c_grid;  // empty: default log-2 ladder 2^-5 .. 2^15
    bool stratified = true;
    std::uint64_t seed = 7;
};

std::vector<double> default_c_grid();

/// Soft-margin linear SVM trained by SMO-style dual coordinate descent with
/// maximal-violating-pair selection; stops when the projected-gradient
/// violation m(alpha) - M(alpha) drops below 1e-3, tightening that threshold
/// tenfold while the primal-dual gap at the recovered solution exceeds
/// 1e-3 (1 + |primal|), within a global epoch budget. w is recovered as
/// sum alpha_i y_i x_i, b as the mean over free support vectors (midpoint
/// fallback when none are free).
BinarySvm train_binary(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c);

double predict_binary(const BinarySvm& m, const std::vector<double>& h);

/// One binary machine per unordered class pair, trained on that pair's
/// subset; the lower class id takes the +1 side.
SvmModel train_multiclass(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c);

/// Majority vote over the pairwise machines; ties broken by summed signed
/// scores, then by class order.
int predict_multiclass(const SvmModel& m, const std::vector<double>& h);

/// Stratified k-fold mean accuracy (percent). Folds are reduced (with a
/// warning on stderr) when the smallest class has fewer members than folds.
double cross_validate(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int folds,
                      double c, std::uint64_t seed = 7);

/// CV accuracy maximizer over cfg's C grid; ties go to the smallest C.
double grid_search_c(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     const CvConfig& cfg = {});

}  // namespace rbow
