#include "retinabow/serialize.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rbow {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (!EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::string& data) { return sha256_hex(data.data(), data.size()); }

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string codebook_to_json(const Codebook& cb) {
    json doc;
    doc["format"] = "rbow-codebook";
    doc["version"] = 1;
    doc["kind"] = kind_name(cb.kind);
    doc["k"] = cb.k;
    doc["dim"] = cb.dim;
    doc["seed"] = cb.seed;
    doc["objective"] = cb.objective;
    json words = json::array();
    for (int i = 0; i < cb.k; ++i) {
        json word = json::array();
        for (int d = 0; d < cb.dim; ++d) word.push_back(cb.word(i)[d]);
        words.push_back(std::move(word));
    }
    doc["words"] = std::move(words);
    return doc.dump(2) + "\n";
}

std::string codebook_digest(const Codebook& cb) { return sha256_hex(codebook_to_json(cb)); }

void save_codebook(const std::string& path, const Codebook& cb) {
    write_file(path, codebook_to_json(cb));
}

Codebook load_codebook(const std::string& path) {
    json doc = json::parse(read_file(path));
    if (doc.value("format", "") != "rbow-codebook" || doc.value("version", 0) != 1)
        throw std::runtime_error("not a codebook file: " + path);
    Codebook cb;
    cb.kind = kind_from_name(doc.at("kind").get<std::string>());
    cb.k = doc.at("k").get<int>();
    cb.dim = doc.at("dim").get<int>();
    cb.seed = doc.at("seed").get<std::uint64_t>();
    cb.objective = doc.at("objective").get<double>();
    const json& words = doc.at("words");
    if (static_cast<int>(words.size()) != cb.k) throw std::runtime_error("codebook word count mismatch");
    cb.words.reserve(static_cast<std::size_t>(cb.k) * cb.dim);
    for (const json& word : words) {
        if (static_cast<int>(word.size()) != cb.dim) throw std::runtime_error("codebook word dim mismatch");
        for (const json& v : word) cb.words.push_back(v.get<double>());
    }
    return cb;
}

void save_model(const std::string& path, const ModelFile& mf) {
    json doc;
    doc["format"] = "rbow-model";
    doc["version"] = 1;
    doc["mode"] = mf.mode;
    doc["k"] = mf.k;
    doc["dim"] = mf.model.dim;
    doc["bestc"] = mf.model.bestc;
    json labels = json::array();
    for (int label : mf.model.labels) labels.push_back(label_name(label));
    doc["classes"] = std::move(labels);
    json books = json::array();
    for (const CodebookRef& ref : mf.codebooks)
        books.push_back({{"kind", ref.kind}, {"file", ref.file}, {"hash", ref.hash}});
    doc["codebooks"] = std::move(books);
    json machines = json::array();
    for (std::size_t i = 0; i < mf.model.machines.size(); ++i) {
        const BinarySvm& m = mf.model.machines[i];
        json entry;
        entry["positive"] = label_name(mf.model.pairs[i].first);
        entry["negative"] = label_name(mf.model.pairs[i].second);
        entry["b"] = m.b;
        entry["c"] = m.c;
        entry["w"] = m.w;
        machines.push_back(std::move(entry));
    }
    doc["machines"] = std::move(machines);
    write_file(path, doc.dump(2) + "\n");
}

ModelFile load_model(const std::string& path) {
    json doc = json::parse(read_file(path));
    if (doc.value("format", "") != "rbow-model" || doc.value("version", 0) != 1)
        throw std::runtime_error("not a model file: " + path);
    ModelFile mf;
    mf.mode = doc.at("mode").get<std::string>();
    mf.k = doc.at("k").get<int>();
    mf.model.dim = doc.at("dim").get<int>();
    mf.model.bestc = doc.at("bestc").get<double>();
    for (const json& name : doc.at("classes")) mf.model.labels.push_back(label_from_name(name.get<std::string>()));
    for (const json& ref : doc.at("codebooks")) {
        mf.codebooks.push_back({ref.at("kind").get<std::string>(), ref.at("file").get<std::string>(),
                                ref.at("hash").get<std::string>()});
    }
    for (const json& entry : doc.at("machines")) {
        BinarySvm m;
        m.b = entry.at("b").get<double>();
        m.c = entry.at("c").get<double>();
        m.w = entry.at("w").get<std::vector<double>>();
        mf.model.pairs.emplace_back(label_from_name(entry.at("positive").get<std::string>()),
                                    label_from_name(entry.at("negative").get<std::string>()));
        mf.model.machines.push_back(std::move(m));
    }
    return mf;
}

void save_features(const std::string& path, const FeatureMatrix& f) {
    std::string blob;
    blob.reserve(25 + f.data.size() * 8);
    blob += "RBFM";
    put_u32(blob, 1);
    blob.push_back(static_cast<char>(f.kind));
    put_u32(blob, static_cast<std::uint32_t>(f.rows));
    put_u64(blob, static_cast<std::uint64_t>(f.cols));
    for (double v : f.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(blob, bits);
    }
    write_file(path, blob);
}

FeatureMatrix load_features(const std::string& path) {
    std::string blob = read_file(path);
    if (blob.size() < 21 || blob.compare(0, 4, "RBFM") != 0)
        throw std::runtime_error("not a feature cache file: " + path);
    const char* p = blob.data() + 4;
    std::uint32_t version = get_u32(p);
    p += 4;
    if (version != 1) throw std::runtime_error("unsupported feature cache version in " + path);
    auto kind = static_cast<DescriptorKind>(static_cast<unsigned char>(*p));
    p += 1;
    int rows = static_cast<int>(get_u32(p));
    p += 4;
    std::uint64_t cols = get_u64(p);
    p += 8;
    std::size_t expect = 21 + rows * cols * 8;
    if (blob.size() != expect) throw std::runtime_error("truncated feature cache file: " + path);
    FeatureMatrix f(rows, static_cast<int>(cols), kind);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        std::uint64_t bits = get_u64(p);
        p += 8;
        std::memcpy(&f.data[i], &bits, 8);
    }
    return f;
}

void write_accuracy_svg(const std::string& path, const std::string& title,
                        const std::vector<int>& k_grid,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    if (k_grid.empty() || series.empty()) throw std::invalid_argument("write_accuracy_svg: empty input");
    const int width = 720, height = 460;
    const int left = 70, right = 40, top = 50, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double y_min = 100.0;
    for (const auto& [mode, values] : series)
        for (double v : values) y_min = std::min(y_min, v);
    y_min = std::max(0.0, std::floor(y_min / 10.0) * 10.0 - 10.0);
    const double y_max = 100.0;
    const double k_min = k_grid.front(), k_max = k_grid.back();

    auto sx = [&](double k) {
        return k_max > k_min ? left + (k - k_min) / (k_max - k_min) * plot_w : left + plot_w / 2.0;
    };
    auto sy = [&](double a) { return top + (y_max - a) / (y_max - y_min) * plot_h; };
    auto fmt = [](double v, int prec) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", prec, v);
        return std::string(buf);
    };

    static const char* kColors[] = {"#1b6ca8", "#c0392b", "#27813f", "#8e44ad", "#b8860b"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
           title + "</text>\n";

    for (int g = 0; g <= 5; ++g) {
        double a = y_min + (y_max - y_min) * g / 5.0;
        double y = sy(a);
        svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + fmt(y, 1) + "\" x2=\"" +
               std::to_string(width - right) + "\" y2=\"" + fmt(y, 1) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + fmt(y + 4, 1) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(a, 0) + "</text>\n";
    }
    for (int k : k_grid) {
        double x = sx(k);
        svg += "<line x1=\"" + fmt(x, 1) + "\" y1=\"" + std::to_string(height - bottom) + "\" x2=\"" +
               fmt(x, 1) + "\" y2=\"" + std::to_string(height - bottom + 5) +
               "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(x, 1) + "\" y=\"" + std::to_string(height - bottom + 20) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + std::to_string(k) + "</text>\n";
    }
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top) + "\" x2=\"" +
           std::to_string(left) + "\" y2=\"" + std::to_string(height - bottom) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(height - bottom) + "\" x2=\"" +
           std::to_string(width - right) + "\" y2=\"" + std::to_string(height - bottom) +
           "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + std::to_string(left + static_cast<int>(plot_w) / 2) + "\" y=\"" +
           std::to_string(height - 15) + "\" text-anchor=\"middle\" font-size=\"12\">visual words K</text>\n";
    svg += "<text x=\"18\" y=\"" + std::to_string(top + static_cast<int>(plot_h) / 2) +
           "\" font-size=\"12\" transform=\"rotate(-90 18 " +
           std::to_string(top + static_cast<int>(plot_h) / 2) + ")\" text-anchor=\"middle\">accuracy %</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& [mode, values] = series[s];
        const char* color = kColors[s % 5];
        std::string points;
        int best = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] > values[best]) best = static_cast<int>(i);
            points += fmt(sx(k_grid[i]), 1) + "," + fmt(sy(values[i]), 1) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        svg += "<circle cx=\"" + fmt(sx(k_grid[best]), 1) + "\" cy=\"" + fmt(sy(values[best]), 1) +
               "\" r=\"4\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + fmt(sx(k_grid[best]) + 6, 1) + "\" y=\"" + fmt(sy(values[best]) - 6, 1) +
               "\" font-size=\"10\" fill=\"" + std::string(color) + "\">max " + fmt(values[best], 4) +
               "</text>\n";
        double legend_y = top + 16.0 * s;
        svg += "<line x1=\"" + std::to_string(width - right - 130) + "\" y1=\"" + fmt(legend_y, 1) +
               "\" x2=\"" + std::to_string(width - right - 110) + "\" y2=\"" + fmt(legend_y, 1) +
               "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + std::to_string(width - right - 104) + "\" y=\"" + fmt(legend_y + 4, 1) +
               "\" font-size=\"11\">" + mode + "</text>\n";
    }
    svg += "</svg>\n";
    write_file(path, svg);
}

}  // namespace rbow
