// Acceptance gate: one pass/fail line per criterion, exit 0 iff every
// non-skipped criterion passes. argv[1] must be the CLI binary path; the
// end-to-end criterion shells out to it.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "retinabow/codebook.hpp"
#include "retinabow/encoder.hpp"
#include "retinabow/eval.hpp"
#include "retinabow/experiment.hpp"
#include "retinabow/hog.hpp"
#include "retinabow/image.hpp"
#include "retinabow/lbp.hpp"
#include "retinabow/preprocess.hpp"
#include "retinabow/serialize.hpp"
#include "retinabow/surf.hpp"
#include "retinabow/svm.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace rbow;

namespace {

std::string g_cli;
std::string g_fail;

void fail(const std::string& why) {
    if (g_fail.empty()) g_fail = why;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

ConfusionMatrix cm_from(const std::array<std::array<long, 3>, 3>& c) {
    ConfusionMatrix m;
    m.counts = c;
    return m;
}

RgbImage texture_image(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::uniform_real_distribution<double> ux(20.0, width - 20.0);
    std::uniform_real_distribution<double> uy(20.0, height - 20.0);
    std::uniform_real_distribution<double> us(2.5, 6.0);
    std::uniform_real_distribution<double> ua(0.1, 0.3);
    Plane v(width, height, 0.45);
    for (int i = 0; i < 40; ++i) {
        const double cx = ux(rng), cy = uy(rng), s = us(rng), a = ua(rng);
        const int r = static_cast<int>(4 * s);
        for (int y = std::max(0, int(cy) - r); y < std::min(height, int(cy) + r); ++y)
            for (int x = std::max(0, int(cx) - r); x < std::min(width, int(cx) + r); ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                v.at(x, y) += a * std::exp(-d2 / (2 * s * s));
            }
    }
    for (double& p : v.data) p = std::clamp(p + noise(rng), 0.0, 1.0);
    RgbImage img;
    img.green = v;
    img.red = v;
    img.blue = v;
    for (double& p : img.red.data) p = std::clamp(p * 0.85 + 0.1, 0.0, 1.0);
    for (double& p : img.blue.data) p = std::clamp(p * 0.35 + 0.02, 0.0, 1.0);
    return img;
}

// ---- criterion bodies ------------------------------------------------------

void c1_accuracy_formula() {
    const double a1 = accuracy(cm_from({{{40, 0, 0}, {0, 41, 1}, {1, 1, 136}}}));
    const double a2 = accuracy(cm_from({{{41, 1, 0}, {2, 39, 1}, {1, 1, 124}}}));
    const double a3 = accuracy(cm_from({{{42, 0, 0}, {0, 42, 0}, {0, 0, 126}}}));
    if (!near(a1, 98.6364, 1e-4)) fail("220-image matrix: " + std::to_string(a1));
    if (!near(a2, 97.1429, 1e-4)) fail("210-image matrix: " + std::to_string(a2));
    if (!near(a3, 100.0, 1e-9)) fail("diagonal matrix: " + std::to_string(a3));
}

void c2_descriptor_dims() {
    const RgbImage img = texture_image(512, 512, 7);
    const RgbImage prepared = prepare_channels(img);
    const FeatureMatrix sp = sparse_surf(prepared);
    if (sp.rows != 64) fail("sparse rows " + std::to_string(sp.rows));
    if (sp.cols < 1) fail("no keypoint descriptors");
    const FeatureMatrix ds = dense_surf(prepared);
    if (ds.rows != 192) fail("dense rows " + std::to_string(ds.rows));
    const FeatureMatrix hg = hog_image(prepared);
    if (hg.rows != 93 || kHogBlockDim != 31) fail("hog rows " + std::to_string(hg.rows));
    const FeatureMatrix lb = lbp_image(prepared);
    if (lb.rows != 174 || kLbpBins != 58) fail("lbp rows " + std::to_string(lb.rows));
}

void c3_lbp_exactness() {
    int uniform = 0;
    for (int code = 0; code < 256; ++code)
        if (circular_transitions(code) <= 2) ++uniform;
    if (uniform != 58) fail("uniform count " + std::to_string(uniform));
    const auto& table = uniform_table();
    int assigned = 0, prev = -1;
    for (int code = 0; code < 256; ++code) {
        if ((table[code] >= 0) != (circular_transitions(code) <= 2)) fail("table/transitions disagree");
        if (table[code] >= 0) {
            if (table[code] != ++prev) fail("bins not ascending");
            ++assigned;
        }
    }
    if (assigned != 58) fail("table size " + std::to_string(assigned));

    const int code = lbp_code({75, 77, 77, 48, 56, 65, 21, 22, 26});
    if (code != 15) fail("worked 3x3 example gave " + std::to_string(code));

    if (circular_transitions(0b00000000) != 0) fail("00000000 transitions");
    if (circular_transitions(0b01110000) != 2) fail("01110000 transitions");
    if (circular_transitions(0b11001001) != 4) fail("11001001 transitions");
    if (circular_transitions(0b01010010) != 6) fail("01010010 transitions");
}

void c4_integral_oracle() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pix(0, 255);
    std::uniform_int_distribution<int> coord(-20, 276);
    std::uniform_int_distribution<int> extent(0, 300);
    for (int plane_i = 0; plane_i < 10; ++plane_i) {
        Plane p(256, 256);
        for (double& v : p.data) v = pix(rng);
        const IntegralImage ii(p);
        for (int r = 0; r < 100; ++r) {
            const int x = coord(rng), y = coord(rng), w = extent(rng), h = extent(rng);
            double naive = 0.0;
            for (int yy = std::max(0, y); yy < std::min(256, y + h); ++yy)
                for (int xx = std::max(0, x); xx < std::min(256, x + w); ++xx) naive += p.at(xx, yy);
            if (ii.box_sum(x, y, w, h) != naive) {
                fail("rect mismatch at plane " + std::to_string(plane_i));
                return;
            }
        }
    }
}

FeatureMatrix random_features(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix f(rows, cols);
    for (double& v : f.data) v = g(rng);
    return f;
}

double assignment_objective(const FeatureMatrix& f, const std::vector<int>& assign, int k) {
    const int d = f.rows;
    std::vector<double> centroid(static_cast<std::size_t>(k) * d, 0.0);
    std::vector<int> count(k, 0);
    for (int c = 0; c < f.cols; ++c) {
        ++count[assign[c]];
        for (int r = 0; r < d; ++r) centroid[static_cast<std::size_t>(assign[c]) * d + r] += f.at(r, c);
    }
    for (int j = 0; j < k; ++j) {
        if (count[j] == 0) return std::numeric_limits<double>::infinity();
        for (int r = 0; r < d; ++r) centroid[static_cast<std::size_t>(j) * d + r] /= count[j];
    }
    double obj = 0.0;
    for (int c = 0; c < f.cols; ++c)
        for (int r = 0; r < d; ++r) {
            const double diff = f.at(r, c) - centroid[static_cast<std::size_t>(assign[c]) * d + r];
            obj += diff * diff;
        }
    return obj;
}

void c5_kmeans_guarantees() {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> ud(2, 8), um(20, 60), uk(2, 8);
    for (int i = 0; i < 100; ++i) {
        const FeatureMatrix f = random_features(rng, ud(rng), um(rng));
        std::vector<std::vector<double>> trace;
        KmeansConfig cfg;
        cfg.restarts = 2;
        cfg.seed = 100 + i;
        cfg.trace = &trace;
        kmeans(f, std::min(uk(rng), f.cols), cfg);
        if (trace.empty()) fail("no trace recorded");
        for (const auto& run : trace)
            for (std::size_t t = 1; t < run.size(); ++t)
                if (run[t] > run[t - 1] * (1.0 + 1e-12) + 1e-15) {
                    fail("objective rose at iteration " + std::to_string(t) + " of problem " +
                         std::to_string(i));
                    return;
                }
    }

    std::mt19937_64 rng2(22);
    std::uniform_int_distribution<int> um2(6, 12), uk2(2, 3);
    for (int i = 0; i < 50; ++i) {
        const int m = um2(rng2), k = uk2(rng2);
        const FeatureMatrix f = random_features(rng2, 2, m);
        KmeansConfig cfg;
        cfg.restarts = 40;
        cfg.seed = 500 + i;
        const auto [cb, assign] = kmeans(f, k, cfg);
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> a(m, 0);
        const std::int64_t total = static_cast<std::int64_t>(std::pow(k, m));
        for (std::int64_t code = 0; code < total; ++code) {
            std::int64_t rem = code;
            for (int c = 0; c < m; ++c) {
                a[c] = static_cast<int>(rem % k);
                rem /= k;
            }
            best = std::min(best, assignment_objective(f, a, k));
        }
        if (cb.objective > best * (1.0 + 1e-9) + 1e-12) {
            fail("instance " + std::to_string(i) + ": objective " + std::to_string(cb.objective) +
                 " vs optimum " + std::to_string(best));
            return;
        }
    }

    std::mt19937_64 rng3(23);
    const FeatureMatrix f = random_features(rng3, 5, 37);
    const auto [cb, assign] = kmeans(f, 1, {});
    for (int r = 0; r < f.rows; ++r) {
        double mean = 0.0;
        for (int c = 0; c < f.cols; ++c) mean += f.at(r, c);
        mean /= f.cols;
        if (!near(cb.word(0)[r], mean, 1e-9)) fail("K=1 centroid is not the mean");
    }
}

void c6_encoding_oracle() {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> ud(3, 10), uc(5, 50), uk(2, 16);
    for (int i = 0; i < 100; ++i) {
        const int d = ud(rng), n = uc(rng), k = uk(rng);
        const FeatureMatrix f = random_features(rng, d, n);
        Codebook cb;
        cb.k = k;
        cb.dim = d;
        cb.words.resize(static_cast<std::size_t>(k) * d);
        std::normal_distribution<double> g(0.0, 1.0);
        for (double& v : cb.words) v = g(rng);

        const Assignment got = assign(f, cb);
        for (int c = 0; c < n; ++c) {
            int bestw = 0;
            double bestd = std::numeric_limits<double>::infinity();
            for (int w = 0; w < k; ++w) {
                double dist = 0.0;
                for (int r = 0; r < d; ++r) {
                    const double diff = f.at(r, c) - cb.word(w)[r];
                    dist += diff * diff;
                }
                if (dist < bestd) {
                    bestd = dist;
                    bestw = w;
                }
            }
            if (got[c] != bestw) {
                fail("assignment differs from exhaustive search");
                return;
            }
        }
        const BowHistogram h = pool(got, k);
        double norm = 0.0;
        for (double v : h.values) norm += v * v;
        if (!near(std::sqrt(norm), 1.0, 1e-12)) fail("histogram norm off unit");
    }

    std::mt19937_64 rng2(32);
    const std::vector<DescriptorKind> kinds = {DescriptorKind::Dsurf, DescriptorKind::Hog,
                                               DescriptorKind::Lbp};
    std::map<DescriptorKind, FeatureMatrix> feats;
    std::vector<Codebook> books;
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const int d = 4 + static_cast<int>(i);
        FeatureMatrix f = random_features(rng2, d, 30);
        f.kind = kinds[i];
        feats[kinds[i]] = f;
        Codebook cb;
        cb.kind = kinds[i];
        cb.k = 6;
        cb.dim = d;
        cb.words.resize(static_cast<std::size_t>(cb.k) * d);
        for (double& v : cb.words) v = g(rng2);
        books.push_back(cb);
    }
    const BowHistogram multi = encode_multiple(feats, books);
    std::size_t offset = 0;
    for (const auto& cb : books) {
        const BowHistogram single = encode_single(feats.at(cb.kind), cb);
        for (int j = 0; j < cb.k; ++j)
            if (multi.values[offset + j] != single.values[j]) {
                fail("multiple-mode segment differs from single-mode histogram");
                return;
            }
        offset += cb.k;
    }
}

void c7_svm_optimizer() {
    {
        const std::vector<std::vector<double>> x = {{0.0}, {2.0}};
        const std::vector<int> y = {-1, 1};
        const BinarySvm m = train_binary(x, y, 10.0);
        if (!near(m.w[0], 1.0, 1e-6) || !near(m.b, -1.0, 1e-6))
            fail("analytic 2-point case: w=" + std::to_string(m.w[0]) + " b=" + std::to_string(m.b));
    }

    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> un(6, 20), ud(2, 6);
    const double cs[3] = {0.1, 1.0, 10.0};
    for (int i = 0; i < 50; ++i) {
        const int npos = un(rng), nneg = un(rng), d = ud(rng);
        const double c = cs[i % 3];
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (int j = 0; j < npos; ++j) {
            std::vector<double> v(d);
            for (double& t : v) t = g(rng) + 2.0;
            x.push_back(v);
            y.push_back(1);
        }
        for (int j = 0; j < nneg; ++j) {
            std::vector<double> v(d);
            for (double& t : v) t = g(rng) - 2.0;
            x.push_back(v);
            y.push_back(-1);
        }
        const BinarySvm m = train_binary(x, y, c);

        double sum_ay = 0.0, sum_a = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (m.alpha[j] < -1e-9 || m.alpha[j] > c + 1e-9) {
                fail("alpha outside the box");
                return;
            }
            sum_ay += m.alpha[j] * y[j];
            sum_a += m.alpha[j];
        }
        if (std::abs(sum_ay) > 1e-6) {
            fail("sum alpha_i y_i = " + std::to_string(sum_ay));
            return;
        }

        double wnorm2 = 0.0;
        for (double wv : m.w) wnorm2 += wv * wv;
        double hinge = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double f = m.b;
            for (int r = 0; r < d; ++r) f += m.w[r] * x[j][r];
            hinge += std::max(0.0, 1.0 - y[j] * f);
        }
        const double primal = 0.5 * wnorm2 + c * hinge;
        const double dual = sum_a - 0.5 * wnorm2;
        if (primal - dual > 1e-3 * (1.0 + std::abs(primal))) {
            fail("duality gap " + std::to_string(primal - dual) + " on problem " + std::to_string(i));
            return;
        }
    }

    std::mt19937_64 rng2(42);
    std::normal_distribution<double> g(0.0, 0.3);
    const double centers[3][2] = {{0, 0}, {6, 0}, {0, 6}};
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int cls = 0; cls < 3; ++cls)
        for (int j = 0; j < 25; ++j) {
            x.push_back({centers[cls][0] + g(rng2), centers[cls][1] + g(rng2)});
            y.push_back(cls);
        }
    const SvmModel model = train_multiclass(x, y, 10.0);
    for (std::size_t j = 0; j < x.size(); ++j)
        if (predict_multiclass(model, x[j]) != y[j]) {
            fail("separable 3-class training accuracy below 100%");
            return;
        }
}

void c8_preprocess_statistics() {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> g(0.0, 0.05);
    for (int i = 0; i < 20; ++i) {
        RgbImage img;
        img.green = Plane(96, 80);
        for (int y = 0; y < 80; ++y)
            for (int x = 0; x < 96; ++x)
                img.green.at(x, y) = std::clamp(0.4 + 0.2 * x / 96.0 + g(rng), 0.0, 1.0);
        img.red = img.green;
        img.blue = img.green;
        const Plane out = normalize_green(img);
        if (!near(plane_mean(out), 0.5, 1e-6)) {
            fail("mean " + std::to_string(plane_mean(out)));
            return;
        }
        if (!near(plane_std(out), 0.1, 1e-6)) {
            fail("std " + std::to_string(plane_std(out)));
            return;
        }
    }

    std::mt19937_64 rng2(52);
    std::uniform_real_distribution<double> u(0.0, 0.6);
    RgbImage img;
    img.green = Plane(64, 56);
    for (double& v : img.green.data) v = std::floor(u(rng2) * 128.0) / 256.0;
    img.red = img.green;
    img.blue = img.green;
    RgbImage shifted = img;
    for (double& v : shifted.green.data) v += 0.25;
    const Plane a = normalize_green(img);
    const Plane b = normalize_green(shifted);
    if (plane_std(a) < 0.09) {
        fail("shift-invariance probe degenerated");
        return;
    }
    for (std::size_t j = 0; j < a.data.size(); ++j)
        if (a.data[j] != b.data[j]) {
            fail("shift invariance is not exact");
            return;
        }
}

int run_cli(const std::string& args, const std::string& log_path) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " >\"" + log_path + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return status;
}

void c9_end_to_end() {
    const fs::path work = fs::current_path() / "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);

    testsupport::CorpusSpec spec;
    spec.dir = (work / "corpus").string();
    const std::string manifest = testsupport::generate_corpus(spec);

    const int jobs = std::max(1u, std::thread::hardware_concurrency());
    const std::string common = "sweep --manifest \"" + manifest + "\" --k-grid 10,50 --max-per-image 200 --jobs " +
                               std::to_string(jobs) + " --cache \"" + (work / "cache").string() + "\"";
    for (int run = 1; run <= 2; ++run) {
        const fs::path out = work / ("run" + std::to_string(run));
        const int rc = run_cli(common + " --out \"" + out.string() + "\"",
                               (work / ("run" + std::to_string(run) + ".log")).string());
        if (rc != 0) {
            fail("sweep run " + std::to_string(run) + " exited with status " + std::to_string(rc));
            return;
        }
    }

    for (const std::string tag : {"AB", "BA"}) {
        const std::string r1 = (work / "run1" / ("report_" + tag + ".json")).string();
        const std::string r2 = (work / "run2" / ("report_" + tag + ".json")).string();
        if (sha256_file(r1) != sha256_file(r2)) {
            fail("report_" + tag + ".json differs between runs");
            return;
        }
        std::ifstream in(r1);
        nlohmann::json report = nlohmann::json::parse(in);
        double best_multiple = 0.0, best_single = 0.0;
        for (const auto& [mode, entry] : report.at("best").items()) {
            const double acc = entry.at("accuracy").get<double>();
            if (mode == "multiple")
                best_multiple = acc;
            else
                best_single = std::max(best_single, acc);
        }
        if (best_multiple < 90.0) {
            fail(tag + ": multiple-dictionary accuracy " + std::to_string(best_multiple) + " < 90");
            return;
        }
        if (best_single < 80.0) {
            fail(tag + ": best single-dictionary accuracy " + std::to_string(best_single) + " < 80");
            return;
        }
    }
}

bool c10_available() {
    return std::getenv("RETINA_BOW_STARE_MANIFEST") && std::getenv("RETINA_BOW_DRIVE_MANIFEST");
}

void c10_real_data() {
    const std::string stare = std::getenv("RETINA_BOW_STARE_MANIFEST");
    const std::string drive = std::getenv("RETINA_BOW_DRIVE_MANIFEST");
    const fs::path work = fs::current_path() / "acceptance_real";
    fs::remove_all(work);
    fs::create_directories(work);

    // STARE records become split A, DRIVE records split B.
    DatasetManifest merged;
    for (const auto& [path, split] : {std::pair{stare, 'A'}, {drive, 'B'}}) {
        DatasetManifest m = load_manifest(path, true);
        for (ManifestRecord rec : m.records) {
            rec.split = split;
            merged.records.push_back(rec);
        }
    }
    const std::string combined = (work / "manifest.csv").string();
    {
        std::ofstream out(combined, std::ios::binary);
        out << "path,label,dataset,split\n";
        for (const auto& rec : merged.records)
            out << rec.path << "," << label_name(rec.label) << "," << rec.dataset << "," << rec.split
                << "\n";
    }

    const int jobs = std::max(1u, std::thread::hardware_concurrency());
    const int rc = run_cli("sweep --manifest \"" + combined + "\" --out \"" + (work / "out").string() +
                               "\" --jobs " + std::to_string(jobs) + " --cache \"" +
                               (work / "cache").string() + "\"",
                           (work / "sweep.log").string());
    if (rc != 0) {
        fail("real-data sweep exited with status " + std::to_string(rc));
        return;
    }
    for (const std::string tag : {"AB", "BA"}) {
        if (!fs::exists(work / "out" / ("report_" + tag + ".csv"))) {
            fail("missing report_" + tag + ".csv");
            return;
        }
    }
}

struct Criterion {
    int number;
    std::string name;
    double limit_seconds;
    std::function<void()> body;
    std::function<bool()> available = [] { return true; };
    std::string skip_reason;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <cli-binary>\n", argv[0]);
        return 2;
    }
    g_cli = argv[1];

    const std::vector<Criterion> criteria = {
        {1, "accuracy formula fidelity", 1.0, c1_accuracy_formula},
        {2, "descriptor dimension contracts", 10.0, c2_descriptor_dims},
        {3, "uniform LBP exactness", 1.0, c3_lbp_exactness},
        {4, "integral-image rectangle oracle", 5.0, c4_integral_oracle},
        {5, "k-means guarantees", 30.0, c5_kmeans_guarantees},
        {6, "encoding oracle", 10.0, c6_encoding_oracle},
        {7, "svm optimizer", 60.0, c7_svm_optimizer},
        {8, "preprocessing statistics", 10.0, c8_preprocess_statistics},
        {9, "end-to-end synthetic sweep", 600.0, c9_end_to_end},
        {10, "real-data sweep", 1e9, c10_real_data, c10_available,
         "RETINA_BOW_STARE_MANIFEST/RETINA_BOW_DRIVE_MANIFEST not set"},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!c.available()) {
            std::printf("criterion %2d: %-34s SKIP (%s)\n", c.number, c.name.c_str(),
                        c.skip_reason.c_str());
            continue;
        }
        g_fail.clear();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body();
        } catch (const std::exception& e) {
            fail(std::string("exception: ") + e.what());
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (g_fail.empty() && elapsed > c.limit_seconds)
            fail("runtime " + std::to_string(elapsed) + " s exceeds " + std::to_string(c.limit_seconds) +
                 " s");
        if (g_fail.empty()) {
            std::printf("criterion %2d: %-34s PASS (%.2f s)\n", c.number, c.name.c_str(), elapsed);
        } else {
            std::printf("criterion %2d: %-34s FAIL: %s (%.2f s)\n", c.number, c.name.c_str(),
                        g_fail.c_str(), elapsed);
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
