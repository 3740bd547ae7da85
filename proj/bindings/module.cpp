// Python bindings: a thin surface over the C++ core. JSON crosses the
// boundary as strings; the `raymoe` package wraps these with dict-based
// helpers. Heavy calls (training, evaluation) release the GIL.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "raymoe/baselines.hpp"
#include "raymoe/checkpoint.hpp"
#include "raymoe/common.hpp"
#include "raymoe/data.hpp"
#include "raymoe/harness.hpp"
#include "raymoe/ops.hpp"
#include "raymoe/report.hpp"
#include "raymoe/rng.hpp"

namespace py = pybind11;
using namespace raymoe;

namespace {

/// Owns a classifier loaded from a checkpoint or built from a config.
class PyClassifier {
public:
    explicit PyClassifier(std::unique_ptr<Classifier> m) : model_(std::move(m)) {}

    static PyClassifier load(const std::string& path) {
        return PyClassifier(load_checkpoint(path));
    }

    static PyClassifier create(const std::string& config_json, std::uint64_t seed) {
        Rng rng(seed);
        auto cfg = nlohmann::json::parse(config_json);
        return PyClassifier(make_classifier<float>(cfg, rng));
    }

    py::dict predict(py::array_t<float, py::array::c_style | py::array::forcecast> x,
                     std::uint64_t seed) {
        std::vector<int> shape;
        shape.reserve(static_cast<std::size_t>(x.ndim()));
        for (py::ssize_t d = 0; d < x.ndim(); ++d)
            shape.push_back(static_cast<int>(x.shape(d)));
        Tensor t = Tensor::zeros(shape, false);
        std::copy(x.data(), x.data() + x.size(), t.data->begin());

        Tape tape;
        tape.recording = false;
        Rng rng(seed);
        auto stats = model_->forward(tape, t, rng);

        py::list logits;
        int best = 0;
        for (std::int64_t i = 0; i < stats.logits.numel(); ++i) {
            const float v = (*stats.logits.data)[static_cast<std::size_t>(i)];
            logits.append(v);
            if (v > (*stats.logits.data)[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
        }
        py::dict out;
        out["pred"] = best;
        out["logits"] = logits;
        out["experts_used"] = stats.experts_used;
        return out;
    }

    std::int64_t parameter_count() { return model_->parameter_count(); }
    std::string kind() const { return model_->kind(); }
    std::string config_json() const { return model_->config_json().dump(); }
    void save(const std::string& path) { save_checkpoint(path, *model_); }

private:
    std::unique_ptr<Classifier> model_;
};

py::array_t<double> softmax_np(py::array_t<double, py::array::c_style | py::array::forcecast> x) {
    py::array_t<double> out(x.size());
    softmax_vec(x.data(), out.mutable_data(), static_cast<std::int64_t>(x.size()));
    return out;
}

py::array_t<double> gumbel_ste_np(
    py::array_t<double, py::array::c_style | py::array::forcecast> logits, double tau,
    std::uint64_t seed) {
    TapeT<double> tape;
    tape.recording = false;
    std::vector<int> shape{static_cast<int>(logits.size())};
    auto t = TensorT<double>::zeros(shape, false);
    std::copy(logits.data(), logits.data() + logits.size(), t.data->begin());
    Rng rng(seed);
    auto y = gumbel_softmax_ste(tape, t, rng, tau);
    py::array_t<double> out(logits.size());
    std::copy(y.data->begin(), y.data->end(), out.mutable_data());
    return out;
}

std::string train_json(const std::string& config_json) {
    TrainConfig cfg = nlohmann::json::parse(config_json).get<TrainConfig>();
    cfg.validate();
    TrainResult res = train(cfg);
    nlohmann::json j{{"test_acc", res.metrics.test_acc},
                     {"best_val_acc", res.metrics.best_val_acc},
                     {"epochs_ran", res.metrics.epochs.size()},
                     {"best_checkpoint", res.best_checkpoint},
                     {"last_checkpoint", res.last_checkpoint},
                     {"epochs_csv", res.epochs_csv},
                     {"samples_jsonl", res.samples_jsonl},
                     {"summary_json", res.summary_json}};
    return j.dump();
}

std::string evaluate_json(const std::string& checkpoint, const std::string& dataset,
                          const std::string& split, const std::string& data_dir,
                          std::uint64_t seed, int limit) {
    RunMetrics m = evaluate_checkpoint(checkpoint, dataset, split, data_dir, seed, limit);
    double experts = 0.0;
    for (const auto& s : m.samples) experts += s.experts_used;
    if (!m.samples.empty()) experts /= static_cast<double>(m.samples.size());
    nlohmann::json j{{"accuracy", m.test_acc},
                     {"avg_experts", experts},
                     {"samples", m.samples.size()}};
    return j.dump();
}

py::tuple load_split_np(const std::string& data_dir, const std::string& dataset,
                        const std::string& split) {
    Dataset ds = load_dataset(dataset, data_dir, split);
    py::array_t<float> images({static_cast<py::ssize_t>(ds.n),
                               static_cast<py::ssize_t>(ds.sample_size())});
    std::copy(ds.images.begin(), ds.images.end(), images.mutable_data());
    py::array_t<std::int32_t> labels(static_cast<py::ssize_t>(ds.n));
    std::copy(ds.labels.begin(), ds.labels.end(), labels.mutable_data());
    return py::make_tuple(images, labels);
}

}  // namespace

PYBIND11_MODULE(_raymoe, m) {
    m.doc() = "Routed mixture-of-experts core: tensors, routing, training";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("softmax", &softmax_np, py::arg("x"), "Numerically stable softmax of a 1-D array");
    m.def("gumbel_softmax_ste", &gumbel_ste_np, py::arg("logits"), py::arg("tau") = 25.0,
          py::arg("seed") = 0,
          "One-hot sample of softmax(logits) via Gumbel perturbation (forward value only)");
    m.def("train", &train_json, py::arg("config_json"),
          py::call_guard<py::gil_scoped_release>(),
          "Run a full training job from a JSON config string; returns a JSON summary");
    m.def("evaluate", &evaluate_json, py::arg("checkpoint"), py::arg("dataset"),
          py::arg("split") = "test", py::arg("data_dir") = "", py::arg("seed") = 1,
          py::arg("limit") = 0, py::call_guard<py::gil_scoped_release>(),
          "Evaluate a checkpoint on a dataset split; returns a JSON summary");
    m.def("analyze", &analyze_samples, py::arg("samples_jsonl"), py::arg("out_dir"),
          py::call_guard<py::gil_scoped_release>(),
          "Write histogram/usage/prefix CSVs and analysis.json for a samples file");
    m.def("load_split", &load_split_np, py::arg("data_dir"), py::arg("dataset"),
          py::arg("split"), "Load a dataset split as (images [n, d] float32, labels int32)");
    m.def("default_model_config",
          [](const std::string& model, const std::string& dataset) {
              TrainConfig cfg;
              cfg.model = model;
              cfg.dataset = dataset;
              return make_model_config(cfg).dump();
          },
          py::arg("model"), py::arg("dataset"),
          "JSON classifier config the trainer would build for a model/dataset pair");

    py::class_<PyClassifier>(m, "Classifier")
        .def_static("load", &PyClassifier::load, py::arg("path"),
                    "Load a classifier from a checkpoint file")
        .def_static("create", &PyClassifier::create, py::arg("config_json"), py::arg("seed") = 1,
                    "Build a fresh classifier from a JSON config string")
        .def("predict", &PyClassifier::predict, py::arg("x"), py::arg("seed") = 1,
             "Classify one sample; returns {pred, logits, experts_used}")
        .def("save", &PyClassifier::save, py::arg("path"))
        .def_property_readonly("parameter_count", &PyClassifier::parameter_count)
        .def_property_readonly("kind", &PyClassifier::kind)
        .def_property_readonly("config_json", &PyClassifier::config_json);
}
