#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "retinabow/serialize.hpp"

using namespace rbow;

namespace {

std::string temp_dir() {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "rbow_ser").string();
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string()) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    const std::string path = temp_dir() + "/abc.txt";
    std::ofstream(path, std::ios::binary) << "abc";
    CHECK(sha256_file(path) == sha256_hex(std::string("abc")));
}

TEST_CASE("codebook json round trip preserves every bit") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    Codebook cb;
    cb.kind = DescriptorKind::Hog;
    cb.k = 7;
    cb.dim = 93;
    cb.words.resize(7 * 93);
    for (double& v : cb.words) v = g(rng);
    cb.objective = 123.456789012345678;
    cb.seed = 99;

    const std::string path = temp_dir() + "/cb.json";
    save_codebook(path, cb);
    Codebook back = load_codebook(path);
    CHECK(back.kind == cb.kind);
    CHECK(back.k == cb.k);
    CHECK(back.dim == cb.dim);
    CHECK(back.words == cb.words);
    CHECK(back.objective == cb.objective);
    CHECK(back.seed == cb.seed);

    CHECK(codebook_digest(back) == codebook_digest(cb));
    CHECK(codebook_digest(cb) == sha256_hex(codebook_to_json(cb)));
    CHECK(slurp(path) == codebook_to_json(cb));
}

TEST_CASE("model json round trip") {
    SvmModel m;
    m.labels = {0, 1, 2};
    m.pairs = {{0, 1}, {0, 2}, {1, 2}};
    m.dim = 3;
    m.bestc = 0.5;
    for (int i = 0; i < 3; ++i) {
        BinarySvm b;
        b.w = {0.25 * i, -0.5, 1.0 / 3.0};
        b.b = -0.125 * i;
        b.c = 0.5;
        m.machines.push_back(b);
    }
    ModelFile mf;
    mf.mode = "multiple";
    mf.k = 50;
    mf.model = m;
    mf.codebooks = {{"dsurf", "cb_dsurf.json", "aa"}, {"hog", "cb_hog.json", "bb"},
                    {"lbp", "cb_lbp.json", "cc"}};

    const std::string path = temp_dir() + "/model.json";
    save_model(path, mf);
    ModelFile back = load_model(path);
    CHECK(back.mode == "multiple");
    CHECK(back.k == 50);
    CHECK(back.model.labels == m.labels);
    CHECK(back.model.pairs == m.pairs);
    CHECK(back.model.dim == 3);
    CHECK(back.model.bestc == 0.5);
    REQUIRE(back.model.machines.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.model.machines[i].w == m.machines[i].w);
        CHECK(back.model.machines[i].b == m.machines[i].b);
        CHECK(back.model.machines[i].c == m.machines[i].c);
    }
    REQUIRE(back.codebooks.size() == 3);
    CHECK(back.codebooks[1].kind == "hog");
    CHECK(back.codebooks[1].file == "cb_hog.json");
    CHECK(back.codebooks[1].hash == "bb");
}

TEST_CASE("feature matrix binary round trip") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 3.0);
    FeatureMatrix f(31, 17, DescriptorKind::Lbp);
    for (double& v : f.data) v = g(rng);
    f.data[5] = 0.1 + 0.2;  // not exactly representable
    f.data[6] = -0.0;

    const std::string path = temp_dir() + "/f.rbfm";
    save_features(path, f);
    FeatureMatrix back = load_features(path);
    CHECK(back.rows == f.rows);
    CHECK(back.cols == f.cols);
    CHECK(back.kind == f.kind);
    REQUIRE(back.data.size() == f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        CHECK(std::memcmp(&back.data[i], &f.data[i], sizeof(double)) == 0);
    }

    std::ofstream(temp_dir() + "/junk.rbfm", std::ios::binary) << "NOPE";
    CHECK_THROWS(load_features(temp_dir() + "/junk.rbfm"));
}

TEST_CASE("accuracy chart is deterministic valid svg") {
    std::vector<std::pair<std::string, std::vector<double>>> series = {
        {"dsurf", {75.4, 88.1, 93.1}}, {"hog", {90.4, 93.6, 93.1}}, {"multiple", {91.3, 96.3, 95.4}}};
    const std::vector<int> ks = {10, 20, 30};
    const std::string p1 = temp_dir() + "/a.svg";
    const std::string p2 = temp_dir() + "/b.svg";
    write_accuracy_svg(p1, "accuracy vs dictionary size", ks, series);
    write_accuracy_svg(p2, "accuracy vs dictionary size", ks, series);
    const std::string s1 = slurp(p1);
    CHECK(s1 == slurp(p2));
    CHECK(s1.find("<svg") != std::string::npos);
    CHECK(s1.find("</svg>") != std::string::npos);
    CHECK(s1.find("polyline") != std::string::npos);
    CHECK(s1.find("multiple") != std::string::npos);
    CHECK(s1.find("96.3") != std::string::npos);  // annotated maximum
}

}  // TEST_SUITE
