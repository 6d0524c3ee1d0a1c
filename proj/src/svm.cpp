#include "retinabow/svm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace rbow {

namespace {

constexpr double kEps = 1e-3;
constexpr double kTau = 1e-12;
constexpr int kMaxEpochs = 10000;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::vector<double> default_c_grid() {
    std::vector<double> grid;
    for (int e = -5; e <= 15; e += 2) grid.push_back(std::ldexp(1.0, e));
    return grid;
}

BinarySvm train_binary(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c) {
    const int n = static_cast<int>(x.size());
    if (n < 2 || y.size() != x.size()) throw std::invalid_argument("train_binary: bad problem size");
    if (c <= 0.0) throw std::invalid_argument("train_binary: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw std::invalid_argument("train_binary: labels must be +1/-1");
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("train_binary: single-class input");
    const std::size_t dim = x[0].size();
    for (const auto& row : x) {
        if (row.size() != dim) throw std::invalid_argument("train_binary: inconsistent dimensions");
        for (double v : row)
            if (!std::isfinite(v)) throw std::invalid_argument("train_binary: non-finite data");
    }

    // Gram matrix with label signs folded in: Q[i][j] = y_i y_j x_i.x_j.
    std::vector<double> q(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double v = y[i] * y[j] * dot(x[i], x[j]);
            q[static_cast<std::size_t>(i) * n + j] = v;
            q[static_cast<std::size_t>(j) * n + i] = v;
        }
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> g(n, -1.0);  // dual gradient; alpha = 0 gives -1
    const long max_iter = static_cast<long>(kMaxEpochs) * n;
    long iter = 0;
    double violation = std::numeric_limits<double>::infinity();
    bool pairs_exhausted = false;

    auto solve_to = [&](double eps) {
        while (iter < max_iter) {
            // Maximal violating pair over I_up / I_low.
            int i = -1, j = -1;
            double m_up = -std::numeric_limits<double>::infinity();
            double m_low = std::numeric_limits<double>::infinity();
            for (int t = 0; t < n; ++t) {
                double v = -y[t] * g[t];
                bool in_up = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
                bool in_low = (y[t] == -1 && alpha[t] < c) || (y[t] == 1 && alpha[t] > 0.0);
                if (in_up && v > m_up) {
                    m_up = v;
                    i = t;
                }
                if (in_low && v < m_low) {
                    m_low = v;
                    j = t;
                }
            }
            violation = m_up - m_low;
            if (i < 0 || j < 0) {
                pairs_exhausted = true;
                break;
            }
            if (violation < eps) break;

            const double* qi = q.data() + static_cast<std::size_t>(i) * n;
            const double* qj = q.data() + static_cast<std::size_t>(j) * n;
            double old_ai = alpha[i], old_aj = alpha[j];

            if (y[i] != y[j]) {
                double quad = qi[i] + qj[j] + 2.0 * qi[j];
                if (quad <= 0.0) quad = kTau;
                double delta = (-g[i] - g[j]) / quad;
                double diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if (diff > 0.0 && alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                } else if (diff <= 0.0 && alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if (diff > 0.0 && alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                } else if (diff <= 0.0 && alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                double quad = qi[i] + qj[j] - 2.0 * qi[j];
                if (quad <= 0.0) quad = kTau;
                double delta = (g[i] - g[j]) / quad;
                double sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if (sum > c && alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                } else if (sum <= c && alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if (sum > c && alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                } else if (sum <= c && alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            double dai = alpha[i] - old_ai;
            double daj = alpha[j] - old_aj;
            for (int t = 0; t < n; ++t) g[t] += qi[t] * dai + qj[t] * daj;
            ++iter;
        }
    };

    BinarySvm m;
    m.c = c;

    auto recover = [&]() {
        m.w.assign(dim, 0.0);
        for (int t = 0; t < n; ++t) {
            if (alpha[t] == 0.0) continue;
            double coef = alpha[t] * y[t];
            for (std::size_t d = 0; d < dim; ++d) m.w[d] += coef * x[t][d];
        }
        // b: mean of y_t - w.x_t over free support vectors; else midpoint of
        // the feasible interval from the bound points.
        int n_free = 0;
        double sum_free = 0.0;
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            double yg = y[t] * g[t];  // = w.x_t - y_t at the solution
            if (alpha[t] > 0.0 && alpha[t] < c) {
                ++n_free;
                sum_free += yg;
            } else if ((alpha[t] >= c && y[t] == -1) || (alpha[t] <= 0.0 && y[t] == 1)) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        }
        m.b = n_free > 0 ? -sum_free / n_free : -(ub + lb) / 2.0;
    };

    // Converge to the base threshold first, then keep tightening it tenfold
    // until the primal-dual gap at the recovered (w, b) is within
    // 1e-3 (1 + |primal|), the pair pool is exhausted, or the epoch budget
    // runs out. The gap shrinks with the violation, so this terminates.
    double eps = kEps;
    for (;;) {
        solve_to(eps);
        recover();
        const double wnorm2 = dot(m.w, m.w);
        double hinge = 0.0, sum_a = 0.0;
        for (int t = 0; t < n; ++t) {
            hinge += std::max(0.0, 1.0 - y[t] * (dot(m.w, x[t]) + m.b));
            sum_a += alpha[t];
        }
        const double primal = 0.5 * wnorm2 + c * hinge;
        const double pd_gap = primal - (sum_a - 0.5 * wnorm2);
        if (pd_gap < 1e-3 * (1.0 + std::abs(primal))) break;
        if (pairs_exhausted || iter >= max_iter || eps <= 1e-10) break;
        eps *= 0.1;
    }
    if (violation >= kEps && !pairs_exhausted)
        std::cerr << "train_binary: reached iteration cap with violation " << violation << "\n";

    m.alpha = alpha;
    m.kkt_gap = violation;
    m.iterations = static_cast<int>(std::min<long>(iter, std::numeric_limits<int>::max()));
    return m;
}

double predict_binary(const BinarySvm& m, const std::vector<double>& h) {
    if (h.size() != m.w.size()) throw std::invalid_argument("predict_binary: dimension mismatch");
    return dot(m.w, h) + m.b;
}

SvmModel train_multiclass(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("train_multiclass: bad problem size");
    SvmModel model;
    model.dim = static_cast<int>(x[0].size());
    model.bestc = c;
    for (int label : y)
        if (std::find(model.labels.begin(), model.labels.end(), label) == model.labels.end())
            model.labels.push_back(label);
    std::sort(model.labels.begin(), model.labels.end());
    if (model.labels.size() < 2) throw std::invalid_argument("train_multiclass: fewer than two classes");

    for (std::size_t a = 0; a < model.labels.size(); ++a) {
        for (std::size_t b = a + 1; b < model.labels.size(); ++b) {
            std::vector<std::vector<double>> subset;
            std::vector<int> sy;
            for (std::size_t t = 0; t < x.size(); ++t) {
                if (y[t] == model.labels[a]) {
                    subset.push_back(x[t]);
                    sy.push_back(1);
                } else if (y[t] == model.labels[b]) {
                    subset.push_back(x[t]);
                    sy.push_back(-1);
                }
            }
            model.pairs.emplace_back(model.labels[a], model.labels[b]);
            model.machines.push_back(train_binary(subset, sy, c));
        }
    }
    return model;
}

int predict_multiclass(const SvmModel& m, const std::vector<double>& h) {
    std::map<int, int> votes;
    std::map<int, double> scores;
    for (int label : m.labels) {
        votes[label] = 0;
        scores[label] = 0.0;
    }
    for (std::size_t p = 0; p < m.machines.size(); ++p) {
        double s = predict_binary(m.machines[p], h);
        auto [pos, neg] = m.pairs[p];
        ++votes[s > 0.0 ? pos : neg];
        scores[pos] += s;
        scores[neg] -= s;
    }
    int best = m.labels.front();
    for (int label : m.labels) {
        if (votes[label] > votes[best]) best = label;
        else if (votes[label] == votes[best] && scores[label] > scores[best]) best = label;
    }
    return best;
}

double cross_validate(const std::vector<std::vector<double>>& x, const std::vector<int>& y, int folds,
                      double c, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("cross_validate: bad problem size");

    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < x.size(); ++i) by_class[y[i]].push_back(static_cast<int>(i));

    int min_count = std::numeric_limits<int>::max();
    for (const auto& [label, members] : by_class) min_count = std::min(min_count, static_cast<int>(members.size()));
    int used_folds = folds;
    if (min_count < folds) {
        used_folds = std::max(2, min_count);
        std::cerr << "cross_validate: smallest class has " << min_count << " members, reducing folds from "
                  << folds << " to " << used_folds << "\n";
    }

    std::mt19937_64 rng(seed);
    std::vector<std::vector<int>> fold_members(used_folds);
    for (auto& [label, members] : by_class) {
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng() % i]);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold_members[i % used_folds].push_back(members[i]);
    }

    double accuracy_sum = 0.0;
    for (int f = 0; f < used_folds; ++f) {
        std::vector<std::vector<double>> train_x;
        std::vector<int> train_y;
        for (int g = 0; g < used_folds; ++g) {
            if (g == f) continue;
            for (int idx : fold_members[g]) {
                train_x.push_back(x[idx]);
                train_y.push_back(y[idx]);
            }
        }
        SvmModel model = train_multiclass(train_x, train_y, c);
        int correct = 0;
        for (int idx : fold_members[f])
            if (predict_multiclass(model, x[idx]) == y[idx]) ++correct;
        accuracy_sum += 100.0 * correct / fold_members[f].size();
    }
    return accuracy_sum / used_folds;
}

double grid_search_c(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     const CvConfig& cfg) {
    std::vector<double> grid = cfg.c_grid.empty() ? default_c_grid() : cfg.c_grid;
    double best_c = 0.0;
    double best_accuracy = -1.0;
    for (double c : grid) {
        double accuracy = cross_validate(x, y, cfg.folds, c, cfg.seed);
        if (accuracy > best_accuracy || (accuracy == best_accuracy && c < best_c)) {
            best_accuracy = accuracy;
            best_c = c;
        }
    }
    return best_c;
}

}  // namespace rbow
