#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "retinabow/codebook.hpp"
#include "retinabow/encoder.hpp"
#include "retinabow/eval.hpp"
#include "retinabow/experiment.hpp"
#include "retinabow/image_io.hpp"
#include "retinabow/lbp.hpp"
#include "retinabow/preprocess.hpp"
#include "retinabow/svm.hpp"

namespace py = pybind11;
using namespace rbow;

namespace {

py::array_t<double> to_array(const FeatureMatrix& f) {
    py::array_t<double> a({f.rows, f.cols});
    auto buf = a.mutable_unchecked<2>();
    for (int c = 0; c < f.cols; ++c)
        for (int r = 0; r < f.rows; ++r) buf(r, c) = f.at(r, c);
    return a;
}

FeatureMatrix from_array(const py::array_t<double, py::array::f_style | py::array::forcecast>& a,
                         DescriptorKind kind) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D (dim x count) array");
    FeatureMatrix f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), kind);
    std::memcpy(f.data.data(), a.data(), f.data.size() * sizeof(double));
    return f;
}

Codebook codebook_from_words(const py::array_t<double, py::array::c_style | py::array::forcecast>& words) {
    if (words.ndim() != 2) throw std::invalid_argument("expected a 2-D (k x dim) array");
    Codebook cb;
    cb.k = static_cast<int>(words.shape(0));
    cb.dim = static_cast<int>(words.shape(1));
    cb.words.assign(words.data(), words.data() + cb.k * static_cast<std::size_t>(cb.dim));
    return cb;
}

}  // namespace

PYBIND11_MODULE(_retinabow, m) {
    m.doc() = "bag-of-visual-words retinal image classification core";
    m.attr("__version__") = "0.1.0";
    m.attr("MODES") = kAllModes;

    py::class_<RgbImage>(m, "Image")
        .def_property_readonly("width", &RgbImage::width)
        .def_property_readonly("height", &RgbImage::height);

    m.def("load_image", &load_image, py::arg("path"),
          "Decode an image file into [0,1] RGB planes.");
    m.def(
        "resize_to_height", [](const RgbImage& img, int target) { return resize_to_height(img, target); },
        py::arg("image"), py::arg("target") = 512);
    m.def(
        "prepare_channels", [](const RgbImage& img) { return prepare_channels(img); }, py::arg("image"),
        "Median-subtract and renormalize the green channel; red/blue pass through.");
    m.def(
        "green_stats",
        [](const RgbImage& img) {
            const Plane g = normalize_green(img);
            return py::make_tuple(plane_mean(g), plane_std(g));
        },
        py::arg("image"), "Mean and population std of the normalized green channel.");

    m.def(
        "extract",
        [](const RgbImage& img, const std::string& kind, bool strict) {
            const std::vector<DescriptorKind> kinds = {kind_from_name(kind)};
            auto feats = extract_image_features(img, kinds, {}, strict);
            return to_array(feats.at(kinds[0]));
        },
        py::arg("image"), py::arg("kind"), py::arg("strict") = false,
        "Resize, normalize, and extract one descriptor kind (surf, dsurf, hog, lbp); "
        "rows are descriptor components, columns are descriptors.");

    m.def(
        "lbp_code", [](const std::array<double, 9>& window) { return lbp_code(window); },
        py::arg("window"), "8-bit pattern of a 3x3 neighborhood given in row-major order.");
    m.def("circular_transitions", &circular_transitions, py::arg("code"));

    m.def(
        "kmeans",
        [](const py::array_t<double, py::array::f_style | py::array::forcecast>& features, int k,
           std::uint64_t seed, int restarts, int max_iterations, double tolerance) {
            KmeansConfig cfg;
            cfg.seed = seed;
            cfg.restarts = restarts;
            cfg.max_iterations = max_iterations;
            cfg.tolerance = tolerance;
            const auto [cb, assignment] = kmeans(from_array(features, DescriptorKind::Surf), k, cfg);
            py::array_t<double> words({cb.k, cb.dim});
            std::memcpy(words.mutable_data(), cb.words.data(), cb.words.size() * sizeof(double));
            return py::make_tuple(words, cb.objective, assignment);
        },
        py::arg("features"), py::arg("k"), py::arg("seed") = 1, py::arg("restarts") = 3,
        py::arg("max_iterations") = 300, py::arg("tolerance") = 1e-6,
        "Cluster descriptor columns; returns (words, objective, assignment).");

    m.def(
        "encode",
        [](const py::array_t<double, py::array::f_style | py::array::forcecast>& features,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& words) {
            const Codebook cb = codebook_from_words(words);
            return encode_single(from_array(features, cb.kind), cb).values;
        },
        py::arg("features"), py::arg("words"),
        "Hard-assign descriptors to words and pool into a unit-L2 histogram.");

    py::class_<SvmModel>(m, "SvmModel")
        .def_property_readonly("labels", [](const SvmModel& s) { return s.labels; })
        .def_property_readonly("dim", [](const SvmModel& s) { return s.dim; })
        .def_property_readonly("bestc", [](const SvmModel& s) { return s.bestc; });

    m.def("train_multiclass", &train_multiclass, py::arg("x"), py::arg("y"), py::arg("c"),
          "One-vs-one linear SVM over feature vectors x with integer labels y.");
    m.def("predict_multiclass", &predict_multiclass, py::arg("model"), py::arg("h"));
    m.def("cross_validate", &cross_validate, py::arg("x"), py::arg("y"), py::arg("folds"), py::arg("c"),
          py::arg("seed") = 7, "Stratified k-fold mean accuracy (percent).");

    m.def(
        "accuracy",
        [](const std::array<std::array<long, 3>, 3>& counts) {
            ConfusionMatrix cm;
            cm.counts = counts;
            return accuracy(cm);
        },
        py::arg("confusion"), "100 * trace / total of a 3x3 confusion matrix.");
    m.def("label_name", [](int label) { return label_name(label); }, py::arg("label"));
    m.def("label_from_name", &label_from_name, py::arg("name"));
}
