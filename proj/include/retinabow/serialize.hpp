#pragma once

#include <map>
#include <string>
#include <vector>

#include "retinabow/codebook.hpp"
#include "retinabow/eval.hpp"
#include "retinabow/features.hpp"
#include "retinabow/svm.hpp"

namespace rbow {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

/// Canonical JSON text of a codebook; its SHA-256 is the codebook's identity.
std::string codebook_to_json(const Codebook& cb);
std::string codebook_digest(const Codebook& cb);
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

struct CodebookRef {
    std::string kind;
    std::string file;  // relative to the model file's directory
    std::string hash;
};

struct ModelFile {
    std::string mode;  // single kind name or "multiple"
    int k = 0;
    SvmModel model;
    std::vector<CodebookRef> codebooks;
};

void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

/// Column-major descriptor cache, little-endian binary (magic RBFM).
void save_features(const std::string& path, const FeatureMatrix& f);
FeatureMatrix load_features(const std::string& path);

/// Accuracy-vs-K line chart, one polyline per mode, maxima annotated.
void write_accuracy_svg(const std::string& path, const std::string& title,
                        const std::vector<int>& k_grid,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace rbow
