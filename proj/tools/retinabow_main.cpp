#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "retinabow/experiment.hpp"
#include "retinabow/image_io.hpp"
#include "retinabow/serialize.hpp"

namespace fs = std::filesystem;
using namespace rbow;

namespace {

struct ErrorLog {
    std::vector<std::pair<std::string, std::string>> errors;
    std::vector<std::pair<std::string, std::string>> warnings;

    void error(const std::string& context, const std::string& message) {
        errors.emplace_back(context, message);
        std::cerr << "error: " << context << ": " << message << "\n";
    }
    void warn(const std::string& context, const std::string& message) {
        warnings.emplace_back(context, message);
        std::cerr << "warning: " << context << ": " << message << "\n";
    }

    void write(const std::string& path) const {
        nlohmann::json j;
        auto dump = [](const std::vector<std::pair<std::string, std::string>>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& [c, m] : v) a.push_back({{"context", c}, {"message", m}});
            return a;
        };
        j["errors"] = dump(errors);
        j["warnings"] = dump(warnings);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << "\n";
    }

    int exit_code() const { return errors.empty() ? 0 : 1; }
};

struct CommonOpts {
    std::string manifest;
    std::string out;
    std::string cache;
    std::vector<std::string> modes;
    std::vector<int> k_grid;
    std::string train_split = "A";
    std::string test_split = "B";
    std::uint64_t seed = 1;
    std::uint64_t cv_seed = 7;
    std::vector<double> c_grid;
    int folds = 10;
    bool strict_paper = false;
    int jobs = 0;
    int max_per_image = 0;
    int kmeans_iters = 300;
    double kmeans_tol = 1e-6;
    int kmeans_restarts = 3;
};

std::string resolve_cache(const CommonOpts& o) {
    if (!o.cache.empty()) return o.cache;
    if (const char* env = std::getenv("RETINA_BOW_CACHE"); env && *env) return env;
    return o.out + "/cache";
}

ExperimentConfig experiment_config(const CommonOpts& o) {
    ExperimentConfig cfg;
    if (!o.modes.empty()) cfg.modes = o.modes;
    if (!o.k_grid.empty()) cfg.k_grid = o.k_grid;
    cfg.train_split = o.train_split[0];
    cfg.test_split = o.test_split[0];
    cfg.kmeans.seed = o.seed;
    cfg.kmeans.max_iterations = o.kmeans_iters;
    cfg.kmeans.tolerance = o.kmeans_tol;
    cfg.kmeans.restarts = o.kmeans_restarts;
    cfg.cv.folds = o.folds;
    cfg.cv.seed = o.cv_seed;
    cfg.cv.c_grid = o.c_grid;
    cfg.strict_paper = o.strict_paper;
    cfg.max_per_image = o.max_per_image;
    cfg.jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::thread::hardware_concurrency());
    if (cfg.jobs < 1) cfg.jobs = 1;
    cfg.cache_dir = resolve_cache(o);
    return cfg;
}

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_splits, bool with_grid) {
    cmd->add_option("--manifest", o.manifest, "dataset manifest (csv or json)")->required();
    cmd->add_option("--out", o.out, "output directory")->required();
    cmd->add_option("--cache", o.cache, "cache root (default: RETINA_BOW_CACHE or <out>/cache)");
    cmd->add_option("--seed", o.seed, "dictionary clustering seed");
    cmd->add_option("--jobs", o.jobs, "extraction worker count (default: logical cores)");
    cmd->add_flag("--strict-paper", o.strict_paper, "disable sub-pixel keypoint refinement");
    cmd->add_option("--max-per-image", o.max_per_image,
                    "cap on pooled descriptors per image for clustering (0 = all)");
    cmd->add_option("--kmeans-iters", o.kmeans_iters, "clustering iteration cap");
    cmd->add_option("--kmeans-tol", o.kmeans_tol, "clustering relative tolerance");
    cmd->add_option("--kmeans-restarts", o.kmeans_restarts, "clustering restarts");
    if (with_grid) {
        cmd->add_option("--k-grid", o.k_grid, "dictionary sizes to sweep")->delimiter(',');
        cmd->add_option("--c-grid", o.c_grid, "svm penalty grid")->delimiter(',');
        cmd->add_option("--folds", o.folds, "cross-validation folds");
        cmd->add_option("--cv-seed", o.cv_seed, "cross-validation shuffle seed");
    }
    if (with_splits) {
        cmd->add_option("--train-split", o.train_split, "training split (A or B)")
            ->check(CLI::IsMember({"A", "B"}));
        cmd->add_option("--test-split", o.test_split, "test split (A or B)")
            ->check(CLI::IsMember({"A", "B"}));
    }
}

void print_report(const Report& r) {
    std::printf("train %c -> test %c\n", r.train_split, r.test_split);
    std::printf("%6s", "K");
    for (const auto& m : r.modes) std::printf("  %10s", m.c_str());
    std::printf("\n");
    for (int k : r.k_grid) {
        std::printf("%6d", k);
        for (const auto& m : r.modes) {
            double acc = 0.0;
            for (const auto& row : r.rows)
                if (row.mode == m && row.k == k) acc = row.accuracy;
            std::printf("  %10.4f", acc);
        }
        std::printf("\n");
    }
    std::printf("%6s", "Max");
    for (const auto& m : r.modes) std::printf("  %10.4f", r.best.count(m) ? r.best.at(m).accuracy : 0.0);
    std::printf("\n");
}

void write_direction_reports(const Report& r, const std::string& out, const std::string& tag) {
    const std::string suffix = tag.empty() ? "" : "_" + tag;
    write_report_json(out + "/report" + suffix + ".json", r);
    write_report_csv(out + "/report" + suffix + ".csv", r);
    write_confusion_csvs(out + "/confusion" + suffix, r);
    write_report_svg(out + "/accuracy" + suffix + ".svg", r);
    write_timings_json(out + "/timings" + suffix + ".json", r);
}

int cmd_extract(const CommonOpts& o) {
    fs::create_directories(o.out);
    ErrorLog log;
    try {
        DatasetManifest manifest = load_manifest(o.manifest);
        ExperimentConfig cfg = experiment_config(o);
        std::vector<std::string> paths;
        for (const auto& rec : manifest.records) paths.push_back(rec.path);
        const std::vector<DescriptorKind> kinds = kinds_for_modes(cfg.modes);
        auto feats = extract_images(paths, kinds, cfg);
        int ok = 0;
        for (const auto& f : feats) {
            if (f.ok) {
                ++ok;
            } else {
                log.error(f.path, f.error);
            }
        }
        std::printf("extracted %d/%zu images (%zu descriptor kinds) into %s\n", ok, feats.size(),
                    kinds.size(), cfg.cache_dir.c_str());
    } catch (const std::exception& e) {
        log.error("extract", e.what());
    }
    log.write(o.out + "/errors.json");
    return log.exit_code();
}

int cmd_train(const CommonOpts& o, const std::string& mode, int k) {
    fs::create_directories(o.out);
    ErrorLog log;
    try {
        DatasetManifest manifest = load_manifest(o.manifest);
        ExperimentConfig cfg = experiment_config(o);
        cfg.modes = {mode};
        const std::vector<DescriptorKind> kinds = kinds_for_modes(cfg.modes);

        auto recs = manifest.split(o.train_split[0]);
        if (recs.empty()) throw std::runtime_error("training split is empty");
        std::vector<std::string> paths;
        std::vector<int> labels;
        for (const auto* r : recs) {
            paths.push_back(r->path);
            labels.push_back(r->label);
        }
        auto feats = extract_images(paths, kinds, cfg);
        std::vector<const ImageFeatures*> used;
        std::vector<int> y;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            if (!feats[i].ok) {
                log.warn(feats[i].path, "excluded: " + feats[i].error);
                continue;
            }
            used.push_back(&feats[i]);
            y.push_back(labels[i]);
        }
        if (used.empty()) throw std::runtime_error("no usable training images");

        ModelFile mf;
        mf.mode = mode;
        mf.k = k;
        std::vector<Codebook> books;
        for (DescriptorKind kind : kinds) {
            std::vector<FeatureMatrix> train;
            for (const auto* f : used) train.push_back(f->by_kind.at(kind));
            Codebook cb = build_single_dictionary(train, kind, k, cfg.kmeans, cfg.max_per_image);
            const std::string file = "codebook_" + kind_name(kind) + "_k" + std::to_string(k) + ".json";
            save_codebook(o.out + "/" + file, cb);
            mf.codebooks.push_back({kind_name(kind), file, codebook_digest(cb)});
            books.push_back(std::move(cb));
        }

        std::vector<std::vector<double>> x;
        for (const auto* f : used) {
            if (mode == "multiple")
                x.push_back(encode_multiple(f->by_kind, books).values);
            else
                x.push_back(encode_single(f->by_kind.at(books[0].kind), books[0]).values);
        }

        CvConfig cv = cfg.cv;
        const double bestc = grid_search_c(x, y, cv);
        mf.model = train_multiclass(x, y, bestc);
        mf.model.bestc = bestc;
        const std::string model_file = "model_" + mode + "_k" + std::to_string(k) + ".json";
        save_model(o.out + "/" + model_file, mf);

        const double cv_acc = cross_validate(x, y, cv.folds, bestc, cv.seed);
        std::printf("trained %s (K=%d) on %zu images: bestc=%g cv_accuracy=%.4f\n", mode.c_str(), k,
                    used.size(), bestc, cv_acc);
        std::printf("model: %s/%s\n", o.out.c_str(), model_file.c_str());
    } catch (const std::exception& e) {
        log.error("train", e.what());
    }
    log.write(o.out + "/errors.json");
    return log.exit_code();
}

int cmd_eval(const CommonOpts& o) {
    fs::create_directories(o.out);
    ErrorLog log;
    try {
        DatasetManifest manifest = load_manifest(o.manifest);
        ExperimentConfig cfg = experiment_config(o);
        Report r = run_experiment(cfg, manifest);
        if (r.excluded_images > 0)
            log.warn("eval", std::to_string(r.excluded_images) + " images excluded (see stderr)");
        write_direction_reports(r, o.out, "");
        print_report(r);
    } catch (const std::exception& e) {
        log.error("eval", e.what());
    }
    log.write(o.out + "/errors.json");
    return log.exit_code();
}

int cmd_sweep(const CommonOpts& o) {
    fs::create_directories(o.out);
    ErrorLog log;
    try {
        DatasetManifest manifest = load_manifest(o.manifest);
        for (const auto& [train, test] : {std::pair<char, char>{'A', 'B'}, {'B', 'A'}}) {
            ExperimentConfig cfg = experiment_config(o);
            cfg.train_split = train;
            cfg.test_split = test;
            Report r = run_experiment(cfg, manifest);
            if (r.excluded_images > 0)
                log.warn(std::string("sweep ") + train, std::to_string(r.excluded_images) + " images excluded");
            const std::string tag = std::string(1, train) + std::string(1, test);
            write_direction_reports(r, o.out, tag);
            print_report(r);
        }
    } catch (const std::exception& e) {
        log.error("sweep", e.what());
    }
    log.write(o.out + "/errors.json");
    return log.exit_code();
}

int cmd_predict(const std::string& model_path, const std::string& image_path, bool show_histogram,
                bool strict_paper) {
    try {
        ModelFile mf = load_model(model_path);
        const std::string dir = fs::path(model_path).parent_path().string();
        std::vector<Codebook> books;
        std::vector<DescriptorKind> kinds;
        for (const auto& ref : mf.codebooks) {
            const std::string path = dir.empty() ? ref.file : dir + "/" + ref.file;
            Codebook cb = load_codebook(path);
            if (codebook_digest(cb) != ref.hash)
                throw std::runtime_error("codebook hash mismatch for " + ref.file);
            kinds.push_back(cb.kind);
            books.push_back(std::move(cb));
        }

        RgbImage img = load_image(image_path);
        std::map<DescriptorKind, FeatureMatrix> feats;
        try {
            feats = extract_image_features(img, kinds, {}, strict_paper);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("no descriptors: ") + e.what());
        }

        BowHistogram h = mf.mode == "multiple" ? encode_multiple(feats, books)
                                               : encode_single(feats.at(books[0].kind), books[0]);
        const int label = predict_multiclass(mf.model, h.values);
        std::printf("predicted: %s\n", label_name(label).c_str());
        for (std::size_t m = 0; m < mf.model.pairs.size(); ++m) {
            const auto& [pos, neg] = mf.model.pairs[m];
            const double s = predict_binary(mf.model.machines[m], h.values);
            std::printf("pair %s/%s: %.17g\n", label_name(pos).c_str(), label_name(neg).c_str(), s);
        }
        if (show_histogram) {
            std::printf("histogram:");
            for (double v : h.values) std::printf(" %.17g", v);
            std::printf("\n");
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: predict: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bag-of-visual-words retinal image classification"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string mode = "multiple";
    int k = 50;
    std::string model_path, image_path;
    bool show_histogram = false;
    bool strict_predict = false;

    CLI::App* extract = app.add_subcommand("extract", "compute and cache descriptors for a manifest");
    add_common_flags(extract, o, false, false);
    extract->add_option("--mode", o.modes, "restrict to these modes' descriptor kinds")
        ->delimiter(',')
        ->check(CLI::IsMember(kAllModes));

    CLI::App* train = app.add_subcommand("train", "build dictionaries and an svm model");
    add_common_flags(train, o, true, true);
    train->add_option("--mode", mode, "descriptor mode")->check(CLI::IsMember(kAllModes));
    train->add_option("--k", k, "dictionary size");

    CLI::App* eval = app.add_subcommand("eval", "cross-dataset K sweep for one direction");
    add_common_flags(eval, o, true, true);
    eval->add_option("--mode", o.modes, "modes to evaluate")
        ->delimiter(',')
        ->check(CLI::IsMember(kAllModes));

    CLI::App* sweep = app.add_subcommand("sweep", "full K sweep in both cross-dataset directions");
    add_common_flags(sweep, o, false, true);
    sweep->add_option("--mode", o.modes, "modes to evaluate")
        ->delimiter(',')
        ->check(CLI::IsMember(kAllModes));

    CLI::App* predict = app.add_subcommand("predict", "classify one image with a trained model");
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("--image", image_path, "image file")->required();
    predict->add_flag("--histogram", show_histogram, "print the encoded histogram");
    predict->add_flag("--strict-paper", strict_predict, "disable sub-pixel keypoint refinement");

    CLI11_PARSE(app, argc, argv);

    if (extract->parsed()) return cmd_extract(o);
    if (train->parsed()) return cmd_train(o, mode, k);
    if (eval->parsed()) return cmd_eval(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (predict->parsed()) return cmd_predict(model_path, image_path, show_histogram, strict_predict);
    return 1;
}
