#pragma once

#include <map>
#include <string>
#include <vector>

#include "retinabow/codebook.hpp"
#include "retinabow/encoder.hpp"
#include "retinabow/eval.hpp"
#include "retinabow/image.hpp"
#include "retinabow/surf.hpp"
#include "retinabow/svm.hpp"

namespace rbow {

extern const std::vector<std::string> kAllModes;  // surf, dsurf, hog, lbp, multiple
extern const std::vector<DescriptorKind> kMultipleKinds;  // dsurf, hog, lbp (segment order)

struct ExperimentConfig {
    std::vector<std::string> modes = kAllModes;
    std::vector<int> k_grid = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    char train_split = 'A';
    char test_split = 'B';
    KmeansConfig kmeans;
    CvConfig cv;
    HessianConfig hessian;
    bool strict_paper = false;  // disables sub-pixel keypoint refinement
    int max_per_image = 0;      // codebook pooling cap, 0 = all descriptors
    int jobs = 1;
    std::string cache_dir;  // empty disables on-disk caching
};

struct ReportRow {
    std::string mode;
    int k = 0;
    double bestc = 0.0;
    double cv_accuracy = 0.0;  // train-split CV accuracy at bestc
    double accuracy = 0.0;     // test-split accuracy
    long false_negatives = 0;
    ConfusionMatrix cm;
};

struct ModeBest {
    int k = 0;
    double accuracy = 0.0;
};

struct Report {
    char train_split = 'A';
    char test_split = 'B';
    std::vector<int> k_grid;
    std::vector<std::string> modes;
    int excluded_images = 0;
    std::array<int, kNumClasses> train_counts{};
    std::array<int, kNumClasses> test_counts{};
    std::vector<ReportRow> rows;
    std::map<std::string, ModeBest> best;
    std::map<std::string, double> timings;  // wall-clock seconds, never serialized into the report
};

/// Resize to the working height, normalize the green channel, and extract
/// the requested descriptor kinds.
std::map<DescriptorKind, FeatureMatrix> extract_image_features(const RgbImage& img,
                                                               const std::vector<DescriptorKind>& kinds,
                                                               const HessianConfig& hessian,
                                                               bool strict_paper);

struct ImageFeatures {
    std::string path;
    std::string content_hash;
    bool ok = false;
    std::string error;
    std::map<DescriptorKind, FeatureMatrix> by_kind;
};

/// Cached, optionally parallel extraction for a list of images. Failures are
/// recorded per image, never thrown.
std::vector<ImageFeatures> extract_images(const std::vector<std::string>& paths,
                                          const std::vector<DescriptorKind>& kinds,
                                          const ExperimentConfig& cfg);

std::vector<DescriptorKind> kinds_for_modes(const std::vector<std::string>& modes);
std::string feature_cache_path(const std::string& cache_dir, const std::string& content_hash,
                               DescriptorKind kind, const HessianConfig& hessian, bool strict_paper);

/// Full protocol for one direction: build dictionaries on the train split,
/// encode both splits, select C by cross-validated grid search, train the
/// final model, evaluate on the test split; one row per (mode, K).
Report run_experiment(const ExperimentConfig& cfg, const DatasetManifest& manifest);

void write_report_json(const std::string& path, const Report& r);
void write_report_csv(const std::string& path, const Report& r);
void write_confusion_csvs(const std::string& dir, const Report& r);
void write_timings_json(const std::string& path, const Report& r);
void write_report_svg(const std::string& path, const Report& r);

}  // namespace rbow
