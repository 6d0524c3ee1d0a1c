#include "retinabow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "retinabow/hog.hpp"
#include "retinabow/image_io.hpp"
#include "retinabow/lbp.hpp"
#include "retinabow/preprocess.hpp"
#include "retinabow/serialize.hpp"

namespace fs = std::filesystem;

namespace rbow {

const std::vector<std::string> kAllModes = {"surf", "dsurf", "hog", "lbp", "multiple"};
const std::vector<DescriptorKind> kMultipleKinds = {DescriptorKind::Dsurf, DescriptorKind::Hog,
                                                    DescriptorKind::Lbp};

namespace {

constexpr int kWorkingHeight = 512;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
    }
    fs::rename(tmp, path);
}

std::string surf_params_tag(const HessianConfig& h, bool refine) {
    std::ostringstream ss;
    ss << "surf.v1.o" << h.octaves << ".i" << h.intervals << ".f" << h.init_filter_size << ".t"
       << fmt_double(h.threshold) << ".r" << (refine ? 1 : 0);
    return ss.str();
}

std::string kind_params_tag(DescriptorKind kind, const HessianConfig& h, bool strict_paper) {
    const std::string prep = "prep.v1.h" + std::to_string(kWorkingHeight) + "|";
    switch (kind) {
        case DescriptorKind::Surf:
            return prep + surf_params_tag(h, h.subpixel_refine && !strict_paper);
        case DescriptorKind::Dsurf:
            return prep + "dsurf.v1";
        case DescriptorKind::Hog:
            return prep + "hog.v1";
        case DescriptorKind::Lbp:
            return prep + "lbp.v1";
    }
    throw std::logic_error("bad kind");
}

}  // namespace

std::vector<DescriptorKind> kinds_for_modes(const std::vector<std::string>& modes) {
    bool want[4] = {false, false, false, false};
    for (const auto& m : modes) {
        if (m == "multiple") {
            for (DescriptorKind k : kMultipleKinds) want[static_cast<int>(k)] = true;
        } else {
            want[static_cast<int>(kind_from_name(m))] = true;
        }
    }
    std::vector<DescriptorKind> out;
    for (int i = 0; i < 4; ++i)
        if (want[i]) out.push_back(static_cast<DescriptorKind>(i));
    return out;
}

std::string feature_cache_path(const std::string& cache_dir, const std::string& content_hash,
                               DescriptorKind kind, const HessianConfig& hessian, bool strict_paper) {
    const std::string params = sha256_hex(kind_params_tag(kind, hessian, strict_paper));
    return cache_dir + "/features/" + content_hash.substr(0, 16) + "_" + kind_name(kind) + "_" +
           params.substr(0, 12) + ".rbfm";
}

std::map<DescriptorKind, FeatureMatrix> extract_image_features(const RgbImage& img,
                                                               const std::vector<DescriptorKind>& kinds,
                                                               const HessianConfig& hessian,
                                                               bool strict_paper) {
    RgbImage sized = resize_to_height(img, kWorkingHeight);
    RgbImage prepared = prepare_channels(sized);
    HessianConfig cfg = hessian;
    if (strict_paper) cfg.subpixel_refine = false;

    std::map<DescriptorKind, FeatureMatrix> out;
    for (DescriptorKind kind : kinds) {
        switch (kind) {
            case DescriptorKind::Surf:
                out.emplace(kind, sparse_surf(prepared, cfg));
                break;
            case DescriptorKind::Dsurf:
                out.emplace(kind, dense_surf(prepared));
                break;
            case DescriptorKind::Hog:
                out.emplace(kind, hog_image(prepared));
                break;
            case DescriptorKind::Lbp:
                out.emplace(kind, lbp_image(prepared));
                break;
        }
    }
    return out;
}

std::vector<ImageFeatures> extract_images(const std::vector<std::string>& paths,
                                          const std::vector<DescriptorKind>& kinds,
                                          const ExperimentConfig& cfg) {
    const bool caching = !cfg.cache_dir.empty();
    if (caching) fs::create_directories(cfg.cache_dir + "/features");

    std::vector<ImageFeatures> out(paths.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= paths.size()) return;
            ImageFeatures& f = out[i];
            f.path = paths[i];
            try {
                f.content_hash = sha256_file(paths[i]);
                std::vector<DescriptorKind> missing;
                for (DescriptorKind kind : kinds) {
                    if (!caching) {
                        missing.push_back(kind);
                        continue;
                    }
                    const std::string cpath = feature_cache_path(cfg.cache_dir, f.content_hash, kind,
                                                                 cfg.hessian, cfg.strict_paper);
                    if (!fs::exists(cpath)) {
                        missing.push_back(kind);
                        continue;
                    }
                    FeatureMatrix m = load_features(cpath);
                    if (m.kind != kind || m.rows != descriptor_dim(kind)) {
                        missing.push_back(kind);
                        continue;
                    }
                    f.by_kind.emplace(kind, std::move(m));
                }
                if (!missing.empty()) {
                    RgbImage img = load_image(paths[i]);
                    auto computed = extract_image_features(img, missing, cfg.hessian, cfg.strict_paper);
                    for (auto& [kind, m] : computed) {
                        if (caching) {
                            const std::string cpath = feature_cache_path(
                                cfg.cache_dir, f.content_hash, kind, cfg.hessian, cfg.strict_paper);
                            const std::string tmp = cpath + ".tmp";
                            save_features(tmp, m);
                            fs::rename(tmp, cpath);
                        }
                        f.by_kind.emplace(kind, std::move(m));
                    }
                }
                f.ok = true;
            } catch (const std::exception& e) {
                f.ok = false;
                f.error = e.what();
                f.by_kind.clear();
            }
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

namespace {

struct IncludedImage {
    const ImageFeatures* feats = nullptr;
    int label = 0;
    bool train = false;
};

std::string kmeans_tag(const KmeansConfig& km) {
    std::ostringstream ss;
    ss << "it" << km.max_iterations << ".tol" << fmt_double(km.tolerance) << ".re" << km.restarts
       << ".s" << km.seed;
    return ss.str();
}

Codebook cached_codebook(const ExperimentConfig& cfg, DescriptorKind kind, int k,
                         const std::vector<FeatureMatrix>& train_mats,
                         const std::vector<std::string>& train_hashes) {
    std::string key;
    if (!cfg.cache_dir.empty()) {
        std::ostringstream ss;
        ss << "cb.v1|" << kind_name(kind) << "|k" << k << "|" << kmeans_tag(cfg.kmeans) << "|cap"
           << cfg.max_per_image << "|";
        for (const auto& h : train_hashes) ss << h << ",";
        key = cfg.cache_dir + "/codebooks/" + sha256_hex(ss.str()).substr(0, 24) + ".json";
        if (fs::exists(key)) {
            Codebook cb = load_codebook(key);
            if (cb.kind == kind && cb.k == k && cb.dim == descriptor_dim(kind)) return cb;
        }
    }
    Codebook cb = build_single_dictionary(train_mats, kind, k, cfg.kmeans, cfg.max_per_image);
    if (!key.empty()) {
        fs::create_directories(cfg.cache_dir + "/codebooks");
        const std::string tmp = key + ".tmp";
        save_codebook(tmp, cb);
        fs::rename(tmp, key);
    }
    return cb;
}

/// One unit-normalized histogram per included image, cached as CSV keyed on
/// the codebook digest and the ordered image hashes.
std::vector<std::vector<double>> cached_histograms(const ExperimentConfig& cfg,
                                                   const std::vector<IncludedImage>& images,
                                                   DescriptorKind kind, const Codebook& cb) {
    std::string key;
    if (!cfg.cache_dir.empty()) {
        std::ostringstream ss;
        ss << "hist.v1|" << codebook_digest(cb) << "|";
        for (const auto& im : images) ss << im.feats->content_hash << ",";
        key = cfg.cache_dir + "/histograms/" + sha256_hex(ss.str()).substr(0, 24) + ".csv";
        if (fs::exists(key)) {
            std::istringstream in(read_text(key));
            std::vector<std::vector<double>> hists;
            std::string line;
            bool good = true;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::istringstream ls(line);
                std::string hash;
                std::getline(ls, hash, ',');
                const std::size_t idx = hists.size();
                if (idx >= images.size() || hash != images[idx].feats->content_hash) {
                    good = false;
                    break;
                }
                std::vector<double> v;
                std::string cell;
                while (std::getline(ls, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
                if (static_cast<int>(v.size()) != cb.k) {
                    good = false;
                    break;
                }
                hists.push_back(std::move(v));
            }
            if (good && hists.size() == images.size()) return hists;
        }
    }

    std::vector<std::vector<double>> hists;
    hists.reserve(images.size());
    for (const auto& im : images)
        hists.push_back(encode_single(im.feats->by_kind.at(kind), cb).values);

    if (!key.empty()) {
        fs::create_directories(cfg.cache_dir + "/histograms");
        std::ostringstream ss;
        for (std::size_t i = 0; i < images.size(); ++i) {
            ss << images[i].feats->content_hash;
            for (double v : hists[i]) ss << "," << fmt_double(v);
            ss << "\n";
        }
        write_text_atomic(key, ss.str());
    }
    return hists;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg, const DatasetManifest& manifest) {
    if (cfg.train_split == cfg.test_split)
        throw std::invalid_argument("train and test splits must differ");
    if (cfg.modes.empty()) throw std::invalid_argument("no modes selected");
    if (cfg.k_grid.empty()) throw std::invalid_argument("empty K grid");
    for (int k : cfg.k_grid)
        if (k < 1) throw std::invalid_argument("K must be positive");

    const std::vector<DescriptorKind> kinds = kinds_for_modes(cfg.modes);

    Report rep;
    rep.train_split = cfg.train_split;
    rep.test_split = cfg.test_split;
    rep.k_grid = cfg.k_grid;
    std::sort(rep.k_grid.begin(), rep.k_grid.end());
    rep.k_grid.erase(std::unique(rep.k_grid.begin(), rep.k_grid.end()), rep.k_grid.end());
    rep.modes = cfg.modes;

    auto train_recs = manifest.split(cfg.train_split);
    auto test_recs = manifest.split(cfg.test_split);
    if (train_recs.empty()) throw std::runtime_error("train split is empty");
    if (test_recs.empty()) throw std::runtime_error("test split is empty");

    std::vector<std::string> paths;
    std::vector<int> labels;
    std::vector<char> is_train;
    for (const auto* r : train_recs) {
        paths.push_back(r->path);
        labels.push_back(r->label);
        is_train.push_back(1);
    }
    for (const auto* r : test_recs) {
        paths.push_back(r->path);
        labels.push_back(r->label);
        is_train.push_back(0);
    }

    auto t0 = std::chrono::steady_clock::now();
    const auto feats = extract_images(paths, kinds, cfg);
    rep.timings["extract"] = seconds_since(t0);

    std::vector<IncludedImage> images;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (!feats[i].ok) {
            std::cerr << "warning: excluding " << feats[i].path << ": " << feats[i].error << "\n";
            ++rep.excluded_images;
            continue;
        }
        images.push_back({&feats[i], labels[i], is_train[i] != 0});
    }

    std::vector<std::string> train_hashes;
    std::vector<int> y_train, y_test;
    for (const auto& im : images) {
        if (im.train) {
            train_hashes.push_back(im.feats->content_hash);
            y_train.push_back(im.label);
            ++rep.train_counts[im.label];
        } else {
            y_test.push_back(im.label);
            ++rep.test_counts[im.label];
        }
    }
    if (y_train.empty()) throw std::runtime_error("no usable training images");
    if (y_test.empty()) throw std::runtime_error("no usable test images");

    std::map<DescriptorKind, std::vector<FeatureMatrix>> train_mats;
    for (DescriptorKind kind : kinds) {
        auto& v = train_mats[kind];
        for (const auto& im : images)
            if (im.train) v.push_back(im.feats->by_kind.at(kind));
    }

    rep.timings["codebook"] = 0.0;
    rep.timings["encode"] = 0.0;
    rep.timings["train"] = 0.0;
    rep.timings["test"] = 0.0;

    for (int k : rep.k_grid) {
        std::map<DescriptorKind, std::vector<std::vector<double>>> hists;
        for (DescriptorKind kind : kinds) {
            t0 = std::chrono::steady_clock::now();
            Codebook cb = cached_codebook(cfg, kind, k, train_mats[kind], train_hashes);
            rep.timings["codebook"] += seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            hists[kind] = cached_histograms(cfg, images, kind, cb);
            rep.timings["encode"] += seconds_since(t0);
        }

        for (const auto& mode : cfg.modes) {
            std::vector<std::vector<double>> x_train, x_test;
            for (std::size_t i = 0; i < images.size(); ++i) {
                std::vector<double> h;
                if (mode == "multiple") {
                    for (DescriptorKind kind : kMultipleKinds) {
                        const auto& seg = hists[kind][i];
                        h.insert(h.end(), seg.begin(), seg.end());
                    }
                } else {
                    h = hists[kind_from_name(mode)][i];
                }
                (images[i].train ? x_train : x_test).push_back(std::move(h));
            }

            t0 = std::chrono::steady_clock::now();
            ReportRow row;
            row.mode = mode;
            row.k = k;
            row.bestc = grid_search_c(x_train, y_train, cfg.cv);
            row.cv_accuracy = cross_validate(x_train, y_train, cfg.cv.folds, row.bestc, cfg.cv.seed);
            SvmModel model = train_multiclass(x_train, y_train, row.bestc);
            rep.timings["train"] += seconds_since(t0);

            t0 = std::chrono::steady_clock::now();
            std::vector<int> pred;
            pred.reserve(x_test.size());
            for (const auto& h : x_test) pred.push_back(predict_multiclass(model, h));
            row.cm = confusion(pred, y_test);
            row.accuracy = accuracy(row.cm);
            row.false_negatives = false_negative_count(row.cm);
            rep.timings["test"] += seconds_since(t0);

            rep.rows.push_back(std::move(row));
        }
    }

    // Rows grouped by mode (configuration order), K ascending within a mode.
    std::map<std::string, int> mode_order;
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) mode_order[cfg.modes[i]] = static_cast<int>(i);
    std::stable_sort(rep.rows.begin(), rep.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
        const int ma = mode_order[a.mode], mb = mode_order[b.mode];
        return ma != mb ? ma < mb : a.k < b.k;
    });

    for (const auto& row : rep.rows) {
        auto it = rep.best.find(row.mode);
        if (it == rep.best.end())
            rep.best[row.mode] = {row.k, row.accuracy};
        else if (row.accuracy > it->second.accuracy)
            it->second = {row.k, row.accuracy};
    }

    double total = 0.0;
    for (const auto& [name, secs] : rep.timings) total += secs;
    rep.timings["total"] = total;
    return rep;
}

namespace {

nlohmann::json counts_json(const std::array<int, kNumClasses>& counts) {
    nlohmann::json j;
    for (int c = 0; c < kNumClasses; ++c) j[label_name(c)] = counts[c];
    return j;
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (int a = 0; a < kNumClasses; ++a) {
        nlohmann::json r = nlohmann::json::array();
        for (int p = 0; p < kNumClasses; ++p) r.push_back(cm.counts[a][p]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

void write_report_json(const std::string& path, const Report& r) {
    nlohmann::json j;
    j["format"] = "rbow-report";
    j["version"] = 1;
    j["train_split"] = std::string(1, r.train_split);
    j["test_split"] = std::string(1, r.test_split);
    j["k_grid"] = r.k_grid;
    j["modes"] = r.modes;
    j["excluded_images"] = r.excluded_images;
    j["train_counts"] = counts_json(r.train_counts);
    j["test_counts"] = counts_json(r.test_counts);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json jr;
        jr["mode"] = row.mode;
        jr["k"] = row.k;
        jr["bestc"] = row.bestc;
        jr["cv_accuracy"] = row.cv_accuracy;
        jr["accuracy"] = row.accuracy;
        jr["false_negatives"] = row.false_negatives;
        jr["confusion"] = confusion_json(row.cm);
        rows.push_back(jr);
    }
    j["rows"] = rows;
    nlohmann::json best;
    for (const auto& [mode, mb] : r.best) best[mode] = {{"k", mb.k}, {"accuracy", mb.accuracy}};
    j["best"] = best;
    write_text_atomic(path, j.dump(2) + "\n");
}

void write_report_csv(const std::string& path, const Report& r) {
    std::map<std::string, std::map<int, double>> acc;
    for (const auto& row : r.rows) acc[row.mode][row.k] = row.accuracy;

    std::ostringstream ss;
    ss << "K";
    for (const auto& m : r.modes) ss << "," << m;
    ss << "\n";
    char buf[32];
    for (int k : r.k_grid) {
        ss << k;
        for (const auto& m : r.modes) {
            std::snprintf(buf, sizeof(buf), "%.4f", acc[m][k]);
            ss << "," << buf;
        }
        ss << "\n";
    }
    ss << "Max";
    for (const auto& m : r.modes) {
        std::snprintf(buf, sizeof(buf), "%.4f", r.best.count(m) ? r.best.at(m).accuracy : 0.0);
        ss << "," << buf;
    }
    ss << "\n";
    write_text_atomic(path, ss.str());
}

void write_confusion_csvs(const std::string& dir, const Report& r) {
    fs::create_directories(dir);
    for (const auto& row : r.rows) {
        std::ostringstream ss;
        ss << "actual\\predicted";
        for (int p = 0; p < kNumClasses; ++p) ss << "," << label_name(p);
        ss << "\n";
        for (int a = 0; a < kNumClasses; ++a) {
            ss << label_name(a);
            for (int p = 0; p < kNumClasses; ++p) ss << "," << row.cm.counts[a][p];
            ss << "\n";
        }
        write_text_atomic(dir + "/confusion_" + row.mode + "_k" + std::to_string(row.k) + ".csv",
                          ss.str());
    }
}

void write_timings_json(const std::string& path, const Report& r) {
    nlohmann::json j;
    j["format"] = "rbow-timings";
    j["version"] = 1;
    nlohmann::json secs;
    for (const auto& [name, s] : r.timings) secs[name] = s;
    j["seconds"] = secs;
    write_text_atomic(path, j.dump(2) + "\n");
}

void write_report_svg(const std::string& path, const Report& r) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const auto& m : r.modes) {
        std::map<int, double> acc;
        for (const auto& row : r.rows)
            if (row.mode == m) acc[row.k] = row.accuracy;
        std::vector<double> v;
        for (int k : r.k_grid) v.push_back(acc.count(k) ? acc[k] : 0.0);
        series.emplace_back(m, std::move(v));
    }
    std::string title = "accuracy vs dictionary size (train ";
    title += r.train_split;
    title += ", test ";
    title += r.test_split;
    title += ")";
    write_accuracy_svg(path, title, r.k_grid, series);
}

}  // namespace rbow
