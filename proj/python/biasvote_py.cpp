#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "biasvote/audit.hpp"
#include "biasvote/bundle.hpp"
#include "biasvote/corpus.hpp"
#include "biasvote/crosseval.hpp"
#include "biasvote/ensemble.hpp"
#include "biasvote/error.hpp"
#include "biasvote/metrics.hpp"
#include "biasvote/textprep.hpp"
#include "biasvote/triage.hpp"

namespace py = pybind11;
using namespace biasvote;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Dataset make_dataset(const std::string& name, const std::vector<Record>& records) { return {name, records}; }

ensemble::TaskAEnsemble train_a(const Dataset& d, std::uint64_t seed, double ratio, double lr, int epochs,
                                int batch_size) {
  ensemble::TaskAOptions o;
  o.train = model::TrainConfig::reference(seed);
  o.train.learning_rate = lr;
  o.train.epochs = epochs;
  o.train.batch_size = batch_size;
  o.ratio = ratio;
  return ensemble::train_task_a(d, o, seed);
}

ensemble::TaskBModel train_b(const Dataset& d, std::uint64_t seed, double lr, int epochs, int batch_size,
                             const std::string& rule) {
  auto cfg = model::TrainConfig::reference(seed);
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  auto m = ensemble::train_task_b(d, cfg, seed);
  m.set_rule(ensemble::parse_rule(rule));
  return m;
}

metrics::Averaging parse_averaging(const std::string& s) {
  if (s == "macro") return metrics::Averaging::Macro;
  if (s == "weighted") return metrics::Averaging::Weighted;
  throw InvalidArgument("averaging must be 'macro' or 'weighted'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "biasvote core bindings";

  py::register_exception<Error>(m, "BiasvoteError");

  py::class_<LabelTriple>(m, "LabelTriple")
      .def(py::init<int, int, int>(), py::arg("hs"), py::arg("tr"), py::arg("ag"))
      .def_readwrite("hs", &LabelTriple::hs)
      .def_readwrite("tr", &LabelTriple::tr)
      .def_readwrite("ag", &LabelTriple::ag)
      .def("valid", &LabelTriple::valid)
      .def("__eq__", [](const LabelTriple& a, const LabelTriple& b) { return a == b; })
      .def("__iter__", [](const LabelTriple& t) { return py::iter(py::make_tuple(t.hs, t.tr, t.ag)); })
      .def("__repr__", [](const LabelTriple& t) { return "LabelTriple" + to_string(t); });

  py::class_<GoldLabels>(m, "GoldLabels")
      .def(py::init([](int hs, std::optional<int> tr, std::optional<int> ag) { return GoldLabels{hs, tr, ag}; }),
           py::arg("hs"), py::arg("tr") = py::none(), py::arg("ag") = py::none())
      .def_readwrite("hs", &GoldLabels::hs)
      .def_readwrite("tr", &GoldLabels::tr)
      .def_readwrite("ag", &GoldLabels::ag);

  py::class_<Record>(m, "Record")
      .def(py::init([](std::string id, std::string text, std::optional<GoldLabels> gold) {
             return Record{std::move(id), std::move(text), std::move(gold)};
           }),
           py::arg("id"), py::arg("text"), py::arg("gold") = py::none())
      .def_readwrite("id", &Record::id)
      .def_readwrite("text", &Record::text)
      .def_readwrite("gold", &Record::gold);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("name"), py::arg("records"))
      .def_readwrite("name", &Dataset::name)
      .def_readwrite("records", &Dataset::records)
      .def("__len__", &Dataset::size);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, const std::string& format, std::optional<std::string> label_map) {
        LoadOptions o;
        if (label_map) o.label_map = LabelMap::parse(*label_map);
        return load_dataset(path, parse_format(format), o).dataset;
      },
      py::arg("path"), py::arg("format") = "hateval-tsv", py::arg("label_map") = py::none());
  m.def("save_hateval_tsv", &save_hateval_tsv, py::arg("dataset"), py::arg("path"));

  m.def("preprocess", [](const std::string& text) { return textprep::preprocess(text); }, py::arg("text"));

  py::class_<ensemble::TaskAEnsemble>(m, "TaskAEnsemble")
      .def("predict",
           [](const ensemble::TaskAEnsemble& e, const std::string& text) {
             const auto p = e.predict(text);
             return py::make_tuple(p.label, p.probability, p.votes);
           })
      .def("predict_batch",
           [](const ensemble::TaskAEnsemble& e, const std::vector<std::string>& texts) {
             std::vector<int> labels;
             for (const auto& p : e.predict_batch(texts)) labels.push_back(p.label);
             return labels;
           })
      .def("provenance", [](const ensemble::TaskAEnsemble& e) { return to_py(bundle::provenance_json(e.provenance())); })
      .def("save", [](const ensemble::TaskAEnsemble& e, const std::filesystem::path& dir) { bundle::save_task_a(e, dir); });

  m.def("train_task_a", &train_a, py::arg("dataset"), py::arg("seed"), py::arg("ratio") = 2.0,
        py::arg("learning_rate") = 0.1, py::arg("epochs") = 5, py::arg("batch_size") = 32);
  m.def("load_task_a", [](const std::filesystem::path& dir) { return bundle::load_task_a(dir); }, py::arg("dir"));

  py::class_<ensemble::TaskBModel>(m, "TaskBModel")
      .def("predict",
           [](const ensemble::TaskBModel& mdl, const std::string& text) {
             const auto p = mdl.predict(text);
             return py::make_tuple(p.class_index, p.triple, std::vector<double>(p.probabilities.begin(), p.probabilities.end()));
           })
      .def("predict_batch",
           [](const ensemble::TaskBModel& mdl, const std::vector<std::string>& texts) {
             std::vector<LabelTriple> out;
             for (const auto& p : mdl.predict_batch(texts)) out.push_back(p.triple);
             return out;
           })
      .def_property("rule", [](const ensemble::TaskBModel& mdl) { return std::string(ensemble::rule_name(mdl.rule())); },
                    [](ensemble::TaskBModel& mdl, const std::string& r) { mdl.set_rule(ensemble::parse_rule(r)); })
      .def("save", [](const ensemble::TaskBModel& mdl, const std::filesystem::path& dir) { bundle::save_task_b(mdl, dir); });

  m.def("train_task_b", &train_b, py::arg("dataset"), py::arg("seed"), py::arg("learning_rate") = 0.1,
        py::arg("epochs") = 5, py::arg("batch_size") = 32, py::arg("rule") = "least-confident-negative");
  m.def("load_task_b", [](const std::filesystem::path& dir) { return bundle::load_task_b(dir); }, py::arg("dir"));

  m.def("encode_class", &ensemble::encode_class, py::arg("triple"));
  m.def("decode_class", &ensemble::decode_class, py::arg("index"));
  m.def(
      "combine_predictions",
      [](const std::vector<double>& probs, const std::string& rule) {
        return ensemble::combine_predictions(probs, ensemble::parse_rule(rule));
      },
      py::arg("probs"), py::arg("rule") = "least-confident-negative");
  m.def("majority_vote", [](const std::vector<int>& v) { return ensemble::majority_vote(v); }, py::arg("votes"));

  m.def(
      "prf",
      [](const std::vector<int>& preds, const std::vector<int>& golds, const std::string& averaging) {
        return to_py(metrics::to_json(metrics::prf(preds, golds, parse_averaging(averaging))));
      },
      py::arg("preds"), py::arg("golds"), py::arg("averaging") = "macro");
  m.def("emr", [](const std::vector<LabelTriple>& p, const std::vector<LabelTriple>& g) { return metrics::emr(p, g); },
        py::arg("preds"), py::arg("golds"));
  m.def("cohen_kappa", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return metrics::cohen_kappa(a, b);
  }, py::arg("a"), py::arg("b"));
  m.def(
      "sample_size",
      [](std::uint64_t population, double confidence, double margin) {
        metrics::SampleSpec s;
        s.population = population;
        s.confidence = metrics::parse_confidence(confidence);
        s.margin_percent = margin;
        return metrics::sample_size(s);
      },
      py::arg("population"), py::arg("confidence") = 95.0, py::arg("margin") = 5.0);

  m.def(
      "token_rate_table",
      [](const Dataset& train, const Dataset& dev, const Dataset& test, const std::vector<std::string>& watchlist) {
        return to_py(audit::to_json(audit::token_rate_table({train, dev, test}, watchlist)));
      },
      py::arg("train"), py::arg("dev"), py::arg("test"), py::arg("watchlist"));
  m.def(
      "adjust_splits",
      [](const Dataset& train, const Dataset& dev, const Dataset& test, std::uint64_t seed, bool stratify) {
        auto s = audit::adjust_splits({train, dev, test}, seed, audit::AdjustOptions{stratify});
        return py::make_tuple(s.train, s.dev, s.test);
      },
      py::arg("train"), py::arg("dev"), py::arg("test"), py::arg("seed"), py::arg("stratify") = false);

  m.def(
      "cross_eval",
      [](const std::filesystem::path& bundle_dir, const Dataset& d, const std::string& label_map,
         std::optional<std::size_t> n, std::uint64_t seed) {
        auto e = std::make_shared<const ensemble::TaskAEnsemble>(bundle::load_task_a(bundle_dir));
        const ensemble::TaskAClassifier c(e);
        return to_py(crosseval::to_json(crosseval::cross_eval(c, d, LabelMap::parse(label_map), n, seed)));
      },
      py::arg("bundle_dir"), py::arg("dataset"), py::arg("label_map"), py::arg("n") = py::none(), py::arg("seed"));

  m.def(
      "session_report",
      [](const std::filesystem::path& session_file) {
        return to_py(triage::to_json(triage::session_report(triage::load_session(session_file))));
      },
      py::arg("session_file"));
}
