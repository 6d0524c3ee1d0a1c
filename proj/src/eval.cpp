#include "retinabow/eval.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rbow {

namespace {

const std::array<std::string, kNumClasses> kLabelNames = {"normal", "drusen", "exudate"};

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

void validate(DatasetManifest& m, const std::string& path, bool strict_files) {
    if (m.records.empty()) throw std::runtime_error("load_manifest: no records in " + path);
    std::set<std::string> seen;
    for (const ManifestRecord& r : m.records) {
        if (!seen.insert(r.path).second)
            throw std::runtime_error("load_manifest: duplicate path " + r.path);
        if (r.split != 'A' && r.split != 'B')
            throw std::runtime_error("load_manifest: split must be A or B for " + r.path);
        if (strict_files && !std::filesystem::exists(r.path))
            throw std::runtime_error("load_manifest: missing image file " + r.path);
    }
}

}  // namespace

int label_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kLabelNames[i]) return i;
    throw std::runtime_error("unknown label '" + name + "' (expected normal/drusen/exudate)");
}

const std::string& label_name(int label) {
    if (label < 0 || label >= kNumClasses) throw std::out_of_range("label_name: bad label");
    return kLabelNames[label];
}

std::vector<const ManifestRecord*> DatasetManifest::split(char s) const {
    std::vector<const ManifestRecord*> out;
    for (const ManifestRecord& r : records)
        if (r.split == s) out.push_back(&r);
    return out;
}

std::array<std::array<int, kNumClasses>, 2> DatasetManifest::counts() const {
    std::array<std::array<int, kNumClasses>, 2> c{};
    for (const ManifestRecord& r : records) c[r.split == 'A' ? 0 : 1][r.label]++;
    return c;
}

DatasetManifest load_manifest(const std::string& path, bool strict_files) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);

    DatasetManifest m;
    if (std::filesystem::path(path).extension() == ".json") {
        nlohmann::json doc = nlohmann::json::parse(in);
        if (!doc.is_array()) throw std::runtime_error("load_manifest: JSON manifest must be an array");
        for (const auto& item : doc) {
            ManifestRecord r;
            r.path = item.at("path").get<std::string>();
            r.label = label_from_name(item.at("label").get<std::string>());
            r.dataset = item.value("dataset", "");
            std::string split = item.at("split").get<std::string>();
            if (split.size() != 1) throw std::runtime_error("load_manifest: bad split value");
            r.split = split[0];
            m.records.push_back(std::move(r));
        }
    } else {
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            std::vector<std::string> fields = split_csv_line(line);
            if (header) {
                if (fields != std::vector<std::string>{"path", "label", "dataset", "split"})
                    throw std::runtime_error("load_manifest: expected header path,label,dataset,split");
                header = false;
                continue;
            }
            if (fields.size() != 4) throw std::runtime_error("load_manifest: malformed row: " + line);
            ManifestRecord r;
            r.path = fields[0];
            r.label = label_from_name(fields[1]);
            r.dataset = fields[2];
            if (fields[3].size() != 1) throw std::runtime_error("load_manifest: bad split value: " + line);
            r.split = fields[3][0];
            m.records.push_back(std::move(r));
        }
    }
    validate(m, path, strict_files);
    return m;
}

long ConfusionMatrix::total() const {
    long t = 0;
    for (const auto& row : counts)
        for (long v : row) t += v;
    return t;
}

long ConfusionMatrix::trace() const {
    long t = 0;
    for (int i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw std::invalid_argument("confusion: prediction/label length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= kNumClasses || predictions[i] < 0 || predictions[i] >= kNumClasses)
            throw std::invalid_argument("confusion: class id out of range");
        cm.counts[labels[i]][predictions[i]]++;
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    long t = cm.total();
    if (t == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
    return 100.0 * cm.trace() / t;
}

long false_negative_count(const ConfusionMatrix& cm) {
    return cm.counts[1][0] + cm.counts[2][0];
}

}  // namespace rbow
