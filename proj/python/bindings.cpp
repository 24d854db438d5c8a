#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cascadecl/continual.hpp"
#include "cascadecl/error.hpp"
#include "cascadecl/harness.hpp"
#include "cascadecl/io.hpp"
#include "cascadecl/metrics.hpp"
#include "cascadecl/synth.hpp"

namespace py = pybind11;
using namespace cascadecl;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

// Flat option names shared with the command-line config files.
ExperimentSpec spec_from(const py::dict& options) {
  ExperimentSpec s;
  const auto j = from_py(options);
  for (const auto& [key, value] : j.items()) {
    if (key == "repeats") s.repeats = value;
    else if (key == "seed") s.seed = value;
    else if (key == "jobs") s.jobs = value;
    else if (key == "train_frac") s.train_frac = value;
    else if (key == "val_frac") s.val_frac = value;
    else if (key == "normalize") s.normalize = value;
    else if (key == "hidden") s.model.hidden_dim = value;
    else if (key == "embed") s.model.embed_dim = value;
    else if (key == "pool_layers") s.model.pool_layers = value;
    else if (key == "pool_ratio") s.model.pool_ratio = value;
    else if (key == "directed") s.model.directed = value;
    else if (key == "epochs") s.train.epochs = value;
    else if (key == "patience") s.train.patience = value;
    else if (key == "batch_size") s.train.batch_size = value;
    else if (key == "lr") s.train.adam.lr = value;
    else throw Error(ErrorCode::InvalidConfig, "unknown option '" + key + "'");
  }
  s.validate();
  return s;
}

Variant variant_from(const py::dict& d, const TrainConfig& train) {
  Variant v;
  v.params.train = train;
  const auto j = from_py(d);
  for (const auto& [key, value] : j.items()) {
    if (key == "name") v.name = value;
    else if (key == "method") v.params.method = parse_continual_method(value.get<std::string>());
    else if (key == "mem_size") v.params.mem_size = value;
    else if (key == "lambda") v.params.lambda = value;
    else if (key == "fisher_samples") v.params.fisher_samples = value;
    else if (key == "gem_rollback") v.params.gem_rollback = value;
    else throw Error(ErrorCode::InvalidConfig, "unknown variant option '" + key + "'");
  }
  if (v.name.empty()) v.name = std::string(to_string(v.params.method));
  return v;
}

py::dict graph_dict(const PropagationGraph& g) {
  py::array_t<double> feats({g.features.rows, g.features.cols});
  std::copy(g.features.data.begin(), g.features.data.end(), feats.mutable_data());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges(g.edges.begin(), g.edges.end());
  py::dict d;
  d["news_id"] = g.news_id;
  d["n"] = g.n;
  d["label"] = static_cast<int>(g.label);
  d["edges"] = edges;
  d["features"] = feats;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Propagation-graph fake news detection with continual learning";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<GraphDataset>(m, "GraphDataset")
      .def("__len__", [](const GraphDataset& d) { return d.graphs.size(); })
      .def_property_readonly("dim", &GraphDataset::dim)
      .def_property_readonly("mode", [](const GraphDataset& d) { return std::string(to_string(d.mode)); })
      .def("graph", [](const GraphDataset& d, std::size_t i) { return graph_dict(d.graphs.at(i)); }, py::arg("index"))
      .def("labels", [](const GraphDataset& d) {
        std::vector<int> out;
        for (const auto& g : d.graphs) out.push_back(static_cast<int>(g.label));
        return out;
      });

  m.def(
      "build_dataset",
      [](const fs::path& tweets, const fs::path& users, const fs::path& labels, std::optional<fs::path> timelines,
         const std::string& features, double window_h, bool use_follow) {
        BuildOptions o;
        o.mode = parse_feature_mode(features);
        o.rules = EdgeRules{window_h, use_follow};
        auto r = build_dataset(read_corpus(tweets, users, timelines, labels), o);
        return py::make_tuple(std::move(r.dataset), to_py(to_json(r.stats)));
      },
      py::arg("tweets"), py::arg("users"), py::arg("labels"), py::arg("timelines") = py::none(),
      py::arg("features") = "profile", py::arg("window_h") = 5.0, py::arg("use_follow") = false,
      "Reads JSONL records and builds propagation graphs. Returns (dataset, build stats).");

  m.def(
      "load_archive", [](const fs::path& dir) { return read_archive(dir).dataset; }, py::arg("dir"));
  m.def(
      "save_archive",
      [](const GraphDataset& d, const fs::path& dir) { write_archive(dir, d, nlohmann::json::object()); },
      py::arg("dataset"), py::arg("dir"));

  m.def(
      "synthetic",
      [](const std::string& regime, std::size_t n_news, std::uint64_t seed, const std::string& features) {
        auto [a, b] = default_regimes();
        if (regime != "A" && regime != "B") throw Error(ErrorCode::InvalidConfig, "regime must be A or B");
        RegimeConfig r = regime == "A" ? a : b;
        r.n_news = n_news;
        r.seed = seed;
        BuildOptions o;
        o.mode = parse_feature_mode(features);
        auto s = generate(r, o);
        return py::make_tuple(std::move(s.dataset), to_py(to_json(s.manifest)));
      },
      py::arg("regime"), py::arg("n_news") = 400, py::arg("seed") = 1, py::arg("features") = "profile",
      "Generates one synthetic regime. Returns (dataset, manifest).");

  m.def(
      "run_single",
      [](const GraphDataset& d, const std::string& name, const py::dict& options) {
        const auto spec = spec_from(options);
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_single(spec, d, name);
        }
        return to_py(to_json(r));
      },
      py::arg("dataset"), py::arg("name"), py::arg("options") = py::dict());

  m.def(
      "run_incremental",
      [](const GraphDataset& d1, const std::string& name1, const GraphDataset& d2, const std::string& name2,
         const py::list& variants, const py::dict& options) {
        const auto spec = spec_from(options);
        std::vector<Variant> vs;
        for (const auto& v : variants) vs.push_back(variant_from(v.cast<py::dict>(), spec.train));
        if (vs.empty()) vs.push_back(variant_from(py::dict(), spec.train));
        ExperimentReport r;
        {
          py::gil_scoped_release release;
          r = run_incremental(spec, d1, name1, d2, name2, vs);
        }
        return to_py(to_json(r));
      },
      py::arg("d1"), py::arg("name1"), py::arg("d2"), py::arg("name2"), py::arg("variants") = py::list(),
      py::arg("options") = py::dict());

  m.def(
      "report_csv",
      [](const py::list& reports) {
        std::vector<ExperimentReport> rs;
        for (const auto& r : reports) rs.push_back(report_from_json(from_py(r)));
        return report_csv(rs);
      },
      py::arg("reports"));

  m.def(
      "compute_metrics",
      [](const std::vector<std::size_t>& pred, const std::vector<std::size_t>& label) {
        const auto x = compute_metrics(pred, label);
        py::dict d;
        d["accuracy"] = x.accuracy;
        d["precision"] = x.precision;
        d["recall"] = x.recall;
        d["f1"] = x.f1;
        return d;
      },
      py::arg("pred"), py::arg("label"));

  m.def(
      "stratified_split",
      [](const std::vector<std::size_t>& labels, double train_frac, std::uint64_t seed) {
        const auto s = stratified_split(labels, train_frac, seed);
        return py::make_tuple(s.train, s.test);
      },
      py::arg("labels"), py::arg("train_frac") = 0.75, py::arg("seed") = 0);

  m.def(
      "gem_project",
      [](const std::vector<double>& g, const std::vector<double>& g_mem) {
        const auto p = gem_project(g, g_mem);
        return py::make_tuple(p.grad, p.projected);
      },
      py::arg("grad"), py::arg("mem_grad"), "Returns (projected gradient, whether a projection happened).");
}
