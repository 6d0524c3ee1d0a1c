#pragma once

#include <array>
#include <string>
#include <vector>

namespace rbow {

inline constexpr int kNumClasses = 3;
// Class order everywhere: normal, drusen, exudate.
int label_from_name(const std::string& name);
const std::string& label_name(int label);

struct ManifestRecord {
    std::string path;
    int label = 0;
    std::string dataset;
    char split = 'A';
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    std::vector<const ManifestRecord*> split(char s) const;
    // counts[split 0=A,1=B][label]
    std::array<std::array<int, kNumClasses>, 2> counts() const;
};

/// CSV with header `path,label,dataset,split`, or a JSON array of objects
/// with those fields. Duplicate paths and unknown labels are errors; with
/// strict_files every listed image must exist on disk.
DatasetManifest load_manifest(const std::string& path, bool strict_files = false);

struct ConfusionMatrix {
    // rows = actual, columns = predicted
    std::array<std::array<long, kNumClasses>, kNumClasses> counts{};

    long total() const;
    long trace() const;
};

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

/// 100 * trace / total.
double accuracy(const ConfusionMatrix& cm);

/// Abnormal images (drusen or exudate) predicted normal.
long false_negative_count(const ConfusionMatrix& cm);

}  // namespace rbow
