#include "biasvote/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "biasvote/adapter.hpp"
#include "biasvote/audit.hpp"
#include "biasvote/bundle.hpp"
#include "biasvote/checksum.hpp"
#include "biasvote/corpus.hpp"
#include "biasvote/crosseval.hpp"
#include "biasvote/ensemble.hpp"
#include "biasvote/error.hpp"
#include "biasvote/metrics.hpp"
#include "biasvote/server.hpp"
#include "biasvote/session_store.hpp"
#include "biasvote/triage.hpp"

namespace biasvote::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Reads `{"<subcommand>": {"<flag>": value, ...}}`; nested objects address
/// sub-subcommands. Arrays become repeated values.
class JsonConfig : public CLI::Config {
public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        walk(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (!value.is_null()) {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  static json dump(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const auto* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto res = opt->results();
        j[name] = res.size() == 1 ? json(res.front()) : json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const auto* sub : app->get_subcommands({})) {
      auto s = dump(sub, default_also);
      if (!s.empty()) j[sub->get_name()] = s;
    }
    return j;
  }
};

// numbers stay numbers in the manifest
json typed(const std::string& v) {
  const auto j = json::parse(v, nullptr, false);
  return !j.is_discarded() && j.is_number() ? j : json(v);
}

json typed(const std::vector<std::string>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(typed(v));
  return a;
}

/// Option values as resolved after command line, config file and defaults.
json resolved_config(const CLI::App* app) {
  json j = json::object();
  for (const auto* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    const auto res = opt->results();
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (!res.empty()) {
      j[name] = opt->get_expected_max() > 1 ? typed(res) : typed(res.back());
    } else if (!opt->get_default_str().empty()) {
      j[name] = typed(opt->get_default_str());
    } else {
      j[name] = nullptr;
    }
  }
  return j;
}

class Run {
public:
  Run(std::string subcommand, fs::path out_dir, std::ostream& out, std::ostream& err)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), out(out), err(err),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir_);
  }

  const fs::path& dir() const noexcept { return out_dir_; }

  void input(const fs::path& p) {
    if (fs::is_regular_file(p)) inputs_[p.string()] = sha256_file(p);
  }
  void seed(const std::string& name, std::uint64_t v) { seeds_[name] = v; }
  void output(const fs::path& rel) { outputs_.push_back(rel); }

  void write(const fs::path& rel, const std::string& contents) {
    const auto p = out_dir_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + p.string());
    f << contents;
    if (!f) throw Error("write failed for " + p.string());
    output(rel);
  }

  /// Registers every regular file below `rel`.
  void output_tree(const fs::path& rel) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(out_dir_ / rel))
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), out_dir_));
    std::sort(files.begin(), files.end());
    for (auto& f : files)
      if (f.filename() != "run_manifest.json") output(f);
  }

  void finish(const CLI::App* sub) {
    json outputs = json::object();
    for (const auto& rel : outputs_) outputs[rel.generic_string()] = sha256_file(out_dir_ / rel);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m{{"subcommand", subcommand_},
           {"config", resolved_config(sub)},
           {"seeds", seeds_},
           {"inputs", inputs_},
           {"outputs", outputs},
           {"wall_time_seconds", elapsed}};
    std::ofstream f(out_dir_ / "run_manifest.json", std::ios::binary | std::ios::trunc);
    f << m.dump(2) << '\n';
  }

private:
  std::string subcommand_;
  fs::path out_dir_;

public:
  std::ostream& out;
  std::ostream& err;

private:
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::object();
  json seeds_ = json::object();
  std::vector<fs::path> outputs_;
};

Dataset load(Run& run, const std::string& path, const std::string& format, const std::string& map_spec) {
  LoadOptions lo;
  const auto fmt = parse_format(format);
  if (!map_spec.empty())
    lo.label_map = LabelMap::parse(map_spec);
  else if (fmt == DatasetFormat::Olid)
    lo.label_map = LabelMap::olid_default();
  else if (fmt == DatasetFormat::DavidsonCsv)
    lo.label_map = LabelMap::davidson_default();
  auto r = load_dataset(path, fmt, lo);
  for (const auto& issue : r.issues)
    run.err << "warning: " << path << ": skipped " << issue.message << '\n';
  run.input(path);
  return std::move(r.dataset);
}

std::optional<LabelMap> label_map_for(const std::string& format, const std::string& map_spec) {
  if (!map_spec.empty()) return LabelMap::parse(map_spec);
  const auto fmt = parse_format(format);
  if (fmt == DatasetFormat::Olid) return LabelMap::olid_default();
  if (fmt == DatasetFormat::DavidsonCsv) return LabelMap::davidson_default();
  return std::nullopt;
}

std::vector<std::string> texts_of(const Dataset& d) {
  std::vector<std::string> texts;
  texts.reserve(d.size());
  for (const auto& r : d.records) texts.push_back(r.text);
  return texts;
}

std::string join_ints(std::span<const int> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> v;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    if (!part.empty()) v.push_back(std::stoi(part));
  return v;
}

std::string fmt3(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << v;
  return o.str();
}

model::AdapterOptions adapter_options(int timeout_ms) {
  model::AdapterOptions o;
  o.timeout = std::chrono::milliseconds(timeout_ms);
  return o;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string train, format = "hateval-tsv", label_map, out;
  std::uint64_t seed = 0;
  double learning_rate = 0.1;
  int epochs = 5, batch_size = 32;
  std::vector<int> ngram_orders{1, 2};
  std::uint32_t dimension = 1u << 18;
  double ratio = 2.0;
  std::size_t disagreement_floor = ensemble::kDefaultDisagreementFloor;
  std::string rule = "least-confident-negative";
};

void add_train_flags(CLI::App* sub, TrainArgs& a) {
  sub->add_option("--train", a.train, "Training file")->required()->check(CLI::ExistingFile);
  sub->add_option("--format", a.format, "Input format: hateval-tsv, olid or davidson-csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"hateval-tsv", "olid", "davidson-csv"}));
  sub->add_option("--label-map", a.label_map, "Source label map for external formats, e.g. OFF=1,NOT=0");
  sub->add_option("--seed", a.seed, "64-bit seed for sampling and shuffling")->required();
  sub->add_option("--out", a.out, "Output directory for the bundle")->required();
  sub->add_option("--lr", a.learning_rate, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", a.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--ngram-orders", a.ngram_orders, "N-gram orders to hash")->capture_default_str()->expected(1, -1);
  sub->add_option("--dimension", a.dimension, "Hashed feature dimension (power of two)")->capture_default_str();
}

model::TrainConfig train_config(const TrainArgs& a) {
  auto cfg = model::TrainConfig::reference(a.seed);
  cfg.learning_rate = a.learning_rate;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.validate();
  return cfg;
}

textprep::FeaturizerConfig featurizer_config(const TrainArgs& a) {
  textprep::FeaturizerConfig f{a.ngram_orders, a.dimension};
  f.validate();
  return f;
}

void cmd_train_a(const TrainArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("train-a", a.out, out, err);
  run.seed("seed", a.seed);
  const auto d = load(run, a.train, a.format, a.label_map);
  ensemble::TaskAOptions o;
  o.train = train_config(a);
  o.ratio = a.ratio;
  o.disagreement_floor = a.disagreement_floor;
  o.featurizer = featurizer_config(a);
  const auto e = ensemble::train_task_a(d, o, a.seed);
  bundle::save_task_a(e, run.dir(), {{"training_examples", d.size()}, {"training_sha256", sha256_file(a.train)}});
  run.output_tree(".");
  const auto& p = e.provenance();
  out << "trained task A ensemble on " << d.size() << " records\n"
      << "  positive-biased subset: " << p.pos_major_positives << " pos / " << p.pos_major_negatives << " neg\n"
      << "  negative-biased subset: " << p.neg_major_positives << " pos / " << p.neg_major_negatives << " neg\n"
      << "  disagreement set: " << p.disagreement_size << " (raw " << p.disagreement_raw << ")"
      << (p.fallback ? ", fallback to balanced sample" : "") << '\n';
  run.finish(sub);
}

void cmd_train_b(const TrainArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("train-b", a.out, out, err);
  run.seed("seed", a.seed);
  const auto d = load(run, a.train, a.format, a.label_map);
  auto m = ensemble::train_task_b(d, train_config(a), a.seed, featurizer_config(a));
  m.set_rule(ensemble::parse_rule(a.rule));
  bundle::save_task_b(m, run.dir(), {{"training_examples", d.size()}, {"training_sha256", sha256_file(a.train)}});
  run.output_tree(".");
  out << "trained task B one-vs-rest model on " << d.size() << " records\n";
  for (const auto& w : m.warnings()) err << "warning: " << w << '\n';
  run.finish(sub);
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model, test, format = "hateval-tsv", label_map, out, task, rule;
  std::vector<std::string> adapters;
  int timeout_ms = 30000;
};

std::string reference_comparison(bool task_b, double f1, std::optional<double> emr) {
  std::ostringstream o;
  o << "Metric        This run   Published\n";
  if (!task_b) {
    o << "Task A F1     " << std::setw(8) << fmt3(f1) << "   0.73\n";
  } else {
    o << "Task B F1     " << std::setw(8) << fmt3(f1) << "   0.74-0.75\n";
    o << "Task B EMR    " << std::setw(8) << fmt3(emr.value_or(0.0)) << "   0.62\n";
  }
  o << "(published figures are shown for comparison only)\n";
  return o.str();
}

void cmd_eval(const EvalArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  if (a.model.empty() == a.adapters.empty()) throw InvalidArgument("give exactly one of --model or --adapter");
  Run run("eval", a.out, out, err);
  bool task_b = false;
  if (!a.model.empty()) {
    task_b = bundle::bundle_task(a.model) == bundle::Task::B;
    if (!a.task.empty() && (a.task == "b") != task_b)
      throw InvalidArgument("--task " + a.task + " does not match the bundle in " + a.model);
    run.input(fs::path(a.model) / bundle::kManifestName);
  } else {
    if (a.task.empty()) throw InvalidArgument("--task is required with --adapter");
    task_b = a.task == "b";
    if (task_b && a.adapters.size() != 5) throw InvalidArgument("task b needs five --adapter endpoints");
    if (!task_b && a.adapters.size() != 1) throw InvalidArgument("task a takes a single --adapter endpoint");
  }
  const auto d = load(run, a.test, a.format, a.label_map);
  if (d.empty()) throw InvalidArgument("test set " + a.test + " is empty");
  const auto texts = texts_of(d);
  const auto aopts = adapter_options(a.timeout_ms);

  std::ostringstream tsv;
  tsv << "id\tgold\tpredicted\tprobability\tvotes\n";
  json report;
  std::string table;
  double f1 = 0.0;
  std::optional<double> emr;

  if (!task_b) {
    std::vector<model::Prediction> preds;
    if (!a.model.empty()) {
      preds = bundle::load_task_a(a.model, aopts).predict_batch(texts);
    } else {
      const model::AdapterClassifier c(a.adapters.front(), aopts);
      for (double p : c.predict_proba_batch(texts)) preds.push_back({model::decide(p), p, {}});
    }
    std::vector<int> p, g;
    for (std::size_t i = 0; i < d.size(); ++i) {
      p.push_back(preds[i].label);
      g.push_back(hs_label(d.records[i]));
      tsv << d.records[i].id << '\t' << g.back() << '\t' << p.back() << '\t'
          << json(preds[i].probability).dump() << '\t' << join_ints(preds[i].votes) << '\n';
    }
    const auto r = metrics::prf(p, g, metrics::Averaging::Macro, std::vector<int>{0, 1});
    f1 = r.macro.f1;
    report = {{"task", "a"}, {"metrics", metrics::to_json(r)}};
    const std::vector<metrics::TableRow> rows{metrics::table_row(d.name, r)};
    table = metrics::format_table(rows);
  } else {
    std::vector<ensemble::TaskBPrediction> preds;
    const auto rule = a.rule.empty() ? ensemble::NegativeRule::LeastConfidentNegative : ensemble::parse_rule(a.rule);
    if (!a.model.empty()) {
      auto m = bundle::load_task_b(a.model, aopts);
      if (!a.rule.empty()) m.set_rule(rule);
      preds = m.predict_batch(texts);
    } else {
      std::array<ensemble::ClassifierPtr, 5> cs;
      for (std::size_t k = 0; k < 5; ++k) cs[k] = std::make_shared<model::AdapterClassifier>(a.adapters[k], aopts);
      ensemble::TaskBModel m(cs, {}, rule);
      preds = m.predict_batch(texts);
    }
    std::vector<LabelTriple> pt, gt;
    std::array<std::vector<int>, 3> pd, gd;
    for (std::size_t i = 0; i < d.size(); ++i) {
      pt.push_back(preds[i].triple);
      gt.push_back(gold_triple(d.records[i]));
      const std::array<int, 3> pv{pt.back().hs, pt.back().tr, pt.back().ag};
      const std::array<int, 3> gv{gt.back().hs, gt.back().tr, gt.back().ag};
      for (int k = 0; k < 3; ++k) {
        pd[k].push_back(pv[k]);
        gd[k].push_back(gv[k]);
      }
      std::string probs;
      for (std::size_t k = 0; k < 5; ++k) probs += (k ? "," : "") + json(preds[i].probabilities[k]).dump();
      tsv << d.records[i].id << '\t' << join_ints(gv) << '\t' << join_ints(pv) << '\t' << probs << "\t\n";
    }
    emr = metrics::emr(pt, gt);
    json dims = json::object();
    std::vector<metrics::TableRow> rows;
    const char* names[] = {"HS", "TR", "AG"};
    for (int k = 0; k < 3; ++k) {
      const auto r = metrics::prf(pd[k], gd[k], metrics::Averaging::Macro, std::vector<int>{0, 1});
      f1 += r.macro.f1 / 3.0;
      dims[names[k]] = metrics::to_json(r);
      rows.push_back(metrics::table_row(d.name + " " + names[k], r));
    }
    report = {{"task", "b"}, {"emr", *emr}, {"f1", f1}, {"dimensions", dims}};
    table = metrics::format_table(rows) + "EMR " + fmt3(*emr) + "  mean macro F1 " + fmt3(f1) + '\n';
  }

  const auto comparison = reference_comparison(task_b, f1, emr);
  run.write("metrics.json", report.dump(2) + "\n");
  run.write("metrics.txt", table + "\n" + comparison);
  run.write("predictions.tsv", tsv.str());
  out << table << '\n' << comparison;
  run.finish(sub);
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string train, dev, test, format = "hateval-tsv", out, watchlist;
  std::vector<std::string> tokens;
  std::uint64_t seed = 0;
  std::size_t variants = 1;
  bool stratify = false;
};

audit::SplitSet load_splits(Run& run, const SplitArgs& a) {
  audit::SplitSet s;
  s.train = load(run, a.train, a.format, "");
  s.train.name = "train";
  if (!a.dev.empty()) s.dev = load(run, a.dev, a.format, "");
  s.dev.name = "dev";
  s.test = load(run, a.test, a.format, "");
  s.test.name = "test";
  audit::check_unique_ids(s);
  return s;
}

void cmd_audit(const SplitArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("audit", a.out, out, err);
  const auto s = load_splits(run, a);
  auto tokens = a.tokens;
  if (!a.watchlist.empty()) {
    run.input(a.watchlist);
    for (auto& t : audit::load_watchlist(a.watchlist)) tokens.push_back(std::move(t));
  }
  if (tokens.empty()) throw InvalidArgument("give a --watchlist file or at least one --token");
  const auto table = audit::token_rate_table(s, tokens);
  run.write("token_rates.json", audit::to_json(table).dump(2) + "\n");
  run.write("token_rates.csv", audit::to_csv(table));
  out << std::left << std::setw(24) << "token";
  for (const auto& name : audit::kSplitNames) out << std::setw(16) << name;
  out << "disparity\n";
  for (const auto& row : table.rows) {
    out << std::setw(24) << row.token;
    for (const auto& sr : row.splits) {
      const auto cell = sr.rate ? fmt3(*sr.rate) + " (" + std::to_string(sr.count) + ")" : "-";
      out << std::setw(16) << cell;
    }
    out << std::fixed << std::setprecision(1) << row.disparity_points << '\n';
  }
  run.finish(sub);
}

json write_adjusted(Run& run, const fs::path& rel, const audit::SplitSet& original, const audit::SplitSet& adj,
                    std::uint64_t seed, bool stratify) {
  json files = json::object();
  const std::array<std::pair<const char*, const Dataset*>, 3> parts{
      {{"train.tsv", &adj.train}, {"dev.tsv", &adj.dev}, {"test.tsv", &adj.test}}};
  for (const auto& [name, data] : parts) {
    std::ostringstream o;
    write_hateval_tsv(*data, o);
    run.write(rel / name, o.str());
    files[name] = sha256_hex(o.str());
  }
  json m{{"seed", seed},
         {"stratify", stratify},
         {"original_sizes",
          {{"train", original.train.size()}, {"dev", original.dev.size()}, {"test", original.test.size()}}},
         {"files", files}};
  run.write(rel / "adjust_manifest.json", m.dump(2) + "\n");
  return m;
}

void cmd_adjust(const SplitArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("adjust", a.out, out, err);
  run.seed("seed", a.seed);
  const auto s = load_splits(run, a);
  const audit::AdjustOptions opts{a.stratify};
  if (a.variants <= 1) {
    write_adjusted(run, ".", s, audit::adjust_splits(s, a.seed, opts), a.seed, a.stratify);
  } else {
    const auto vs = audit::adjust_variants(s, a.seed, a.variants, opts);
    for (std::size_t i = 0; i < vs.size(); ++i) {
      std::ostringstream name;
      name << "variant_" << std::setw(2) << std::setfill('0') << i + 1;
      write_adjusted(run, name.str(), s, vs[i], a.seed + i, a.stratify);
    }
  }
  out << "adjusted " << s.total() << " records into train " << s.train.size() << ", dev " << s.dev.size()
      << ", test " << s.test.size() << (a.variants > 1 ? " (" + std::to_string(a.variants) + " variants)" : "")
      << '\n';
  run.finish(sub);
}

// ---------------------------------------------------------------------------

struct CrossArgs {
  std::string model, adapter, data, format = "olid", label_map, out, reference;
  std::optional<std::size_t> n;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  int timeout_ms = 30000;
};

void cmd_cross_eval(const CrossArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  if (a.model.empty() == a.adapter.empty()) throw InvalidArgument("give exactly one of --model or --adapter");
  Run run("cross-eval", a.out, out, err);
  run.seed("seed", a.seed);
  const auto d = load(run, a.data, a.format, a.label_map);
  const auto map = label_map_for(a.format, a.label_map).value_or(LabelMap({{"0", 0}, {"1", 1}}));
  const auto aopts = adapter_options(a.timeout_ms);
  ensemble::ClassifierPtr m;
  if (!a.model.empty()) {
    if (bundle::bundle_task(a.model) != bundle::Task::A)
      throw InvalidArgument("cross-eval needs a task A bundle; " + a.model + " holds task B");
    run.input(fs::path(a.model) / bundle::kManifestName);
    m = std::make_shared<ensemble::TaskAClassifier>(
        std::make_shared<const ensemble::TaskAEnsemble>(bundle::load_task_a(a.model, aopts)));
  } else {
    m = std::make_shared<model::AdapterClassifier>(a.adapter, aopts);
  }
  const auto r = crosseval::cross_eval(*m, d, map, a.n, a.seed, a.workers);
  std::optional<metrics::TableRow> ref;
  if (!a.reference.empty()) {
    ref = crosseval::reference_row(a.reference);
    if (!ref) throw InvalidArgument("unknown reference '" + a.reference + "'");
  }
  const auto text = crosseval::format_comparison(r, ref);
  run.write("crosseval.json", crosseval::to_json(r).dump(2) + "\n");
  run.write("crosseval.txt", text);
  out << text;
  run.finish(sub);
}

// ---------------------------------------------------------------------------

struct TriageArgs {
  std::string predictions, test, format = "hateval-tsv", out, session, session_id;
  double confidence = 95.0, margin = 5.0;
  std::uint64_t seed = 0;
};

std::vector<triage::TriageItem> read_misclassified(const std::string& predictions, const Dataset& d) {
  std::ifstream in(predictions);
  if (!in) throw Error("cannot open " + predictions);
  std::map<std::string, const Record*> by_id;
  for (const auto& r : d.records) by_id[r.id] = &r;
  std::vector<triage::TriageItem> items;
  std::string line;
  std::getline(in, line);
  if (line.rfind("id\tgold\tpredicted", 0) != 0) throw FormatError(predictions + " is not an eval predictions file");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cols.push_back(c);
    if (cols.size() < 3) throw ParseError(predictions + ":" + std::to_string(lineno) + ": too few columns", lineno);
    auto gold = split_ints(cols[1]);
    auto pred = split_ints(cols[2]);
    if (gold == pred) continue;
    auto it = by_id.find(cols[0]);
    if (it == by_id.end()) throw InvalidArgument("prediction for id '" + cols[0] + "' has no record in the test set");
    items.push_back({cols[0], it->second->text, std::move(gold), std::move(pred),
                     cols.size() > 4 ? split_ints(cols[4]) : std::vector<int>{}});
  }
  return items;
}

void cmd_triage_sample(const TriageArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  if (!a.session_id.empty() && !triage::SessionStore::valid_id(a.session_id))
    throw InvalidArgument("session id may only contain letters, digits, '_' and '-'");
  Run run("triage sample", a.out, out, err);
  run.seed("seed", a.seed);
  run.input(a.predictions);
  const auto d = load(run, a.test, a.format, "");
  const auto items = read_misclassified(a.predictions, d);
  if (items.empty()) throw InvalidArgument("no misclassified records in " + a.predictions);
  const auto s = triage::draw_sample(items, a.confidence, a.margin, a.seed, a.session_id);
  run.write(s.id() + ".json", triage::serialize(s));
  out << "session " << s.id() << ": " << s.items().size() << " of " << items.size()
      << " misclassified records\n";
  run.finish(sub);
}

void cmd_triage_report(const TriageArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("triage report", a.out, out, err);
  run.input(a.session);
  const auto r = triage::session_report(triage::load_session(a.session));
  run.write("report.json", triage::to_json(r).dump(2) + "\n");
  run.write("report.txt", triage::format_report(r));
  out << triage::format_report(r);
  run.finish(sub);
}

void cmd_triage_export(const TriageArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Run run("triage export", a.out, out, err);
  run.input(a.session);
  run.write("agreed.csv", triage::agreed_items_csv(triage::load_session(a.session)));
  out << "wrote " << (run.dir() / "agreed.csv").string() << '\n';
  run.finish(sub);
}

struct ServeArgs {
  std::string store, host = "127.0.0.1", static_dir;
  int port = 8080;
};

void cmd_serve(const ServeArgs& a, std::ostream& out) {
  triage::SessionStore store(a.store);
  server::ServerOptions opts;
  opts.host = a.host;
  opts.port = a.port;
  if (!a.static_dir.empty()) opts.static_dir = a.static_dir;
  server::Server srv(store, opts);
  const int port = srv.bind();
  out << "serving " << store.list().size() << " session(s) from " << a.store << " on http://" << a.host << ":"
      << port << std::endl;
  srv.listen();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biased-voter ensembles, evaluation, split audits and misclassification triage", "biasvote"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file: {\"<subcommand>\": {\"<flag>\": value}}. "
                                 "Flags on the command line take precedence")
      ->envname("BIASVOTE_CONFIG");
  app.require_subcommand(1);
  app.fallthrough();  // lets --config follow the subcommand name
  app.set_version_flag("--version", "biasvote 0.1.0");

  TrainArgs ta, tb;
  auto* train_a = app.add_subcommand("train-a", "Train the three-voter task A ensemble");
  add_train_flags(train_a, ta);
  train_a->add_option("--ratio", ta.ratio, "Majority:minority ratio of the biased subsets")
      ->capture_default_str()
      ->check(CLI::Range(1.0, 1e9));
  train_a->add_option("--disagreement-floor", ta.disagreement_floor,
                      "Smallest balanced disagreement set before falling back")
      ->capture_default_str();

  auto* train_b = app.add_subcommand("train-b", "Train the five one-vs-rest task B classifiers");
  add_train_flags(train_b, tb);
  train_b->add_option("--rule", tb.rule, "Class choice when no classifier is positive")
      ->capture_default_str()
      ->check(CLI::IsMember({"least-confident-negative", "global-minimum"}));

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a bundle or adapter on a labeled test set");
  eval->add_option("--model", ev.model, "Bundle directory")->check(CLI::ExistingDirectory);
  eval->add_option("--adapter", ev.adapters,
                   "Classifier adapter endpoint (http://host:port or exec:<command>); five for task b");
  eval->add_option("--test", ev.test, "Test file")->required()->check(CLI::ExistingFile);
  eval->add_option("--format", ev.format, "Input format")
      ->capture_default_str()
      ->check(CLI::IsMember({"hateval-tsv", "olid", "davidson-csv"}));
  eval->add_option("--label-map", ev.label_map, "Source label map for external formats");
  eval->add_option("--task", ev.task, "a or b; read from the bundle when omitted")->check(CLI::IsMember({"a", "b"}));
  eval->add_option("--rule", ev.rule, "Override the task B negative rule")
      ->check(CLI::IsMember({"least-confident-negative", "global-minimum"}));
  eval->add_option("--timeout-ms", ev.timeout_ms, "Adapter request timeout")->capture_default_str();
  eval->add_option("--out", ev.out, "Output directory")->required();

  SplitArgs au, ad;
  auto add_split_flags = [](CLI::App* sub, SplitArgs& a) {
    sub->add_option("--train", a.train, "Training split")->required()->check(CLI::ExistingFile);
    sub->add_option("--dev", a.dev, "Development split (optional)")->check(CLI::ExistingFile);
    sub->add_option("--test", a.test, "Test split")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", a.format, "Input format")
        ->capture_default_str()
        ->check(CLI::IsMember({"hateval-tsv", "olid", "davidson-csv"}));
    sub->add_option("--out", a.out, "Output directory")->required();
  };
  auto* audit_cmd = app.add_subcommand("audit", "Per-split positive rates of watchlist tokens");
  add_split_flags(audit_cmd, au);
  audit_cmd->add_option("--watchlist", au.watchlist, "Token file, one per line")->check(CLI::ExistingFile);
  audit_cmd->add_option("--token", au.tokens, "Extra watchlist token (repeatable)");

  auto* adjust = app.add_subcommand("adjust", "Merge, shuffle and re-split at the original sizes");
  add_split_flags(adjust, ad);
  adjust->add_option("--seed", ad.seed, "64-bit shuffle seed")->required();
  adjust->add_option("--variants", ad.variants, "Number of adjusted variants (seeds seed, seed+1, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  adjust->add_flag("--stratify", ad.stratify, "Keep the HS class proportions in every split");

  CrossArgs ce;
  auto* cross = app.add_subcommand("cross-eval", "Weighted evaluation of a task A model on an external corpus");
  cross->add_option("--model", ce.model, "Task A bundle directory")->check(CLI::ExistingDirectory);
  cross->add_option("--adapter", ce.adapter, "Classifier adapter endpoint");
  cross->add_option("--data", ce.data, "External dataset")->required()->check(CLI::ExistingFile);
  cross->add_option("--format", ce.format, "Input format")
      ->capture_default_str()
      ->check(CLI::IsMember({"hateval-tsv", "olid", "davidson-csv"}));
  cross->add_option("--label-map", ce.label_map, "Source label map; format defaults apply when omitted");
  cross->add_option("--n", ce.n, "Sample size (whole file when omitted)");
  cross->add_option("--seed", ce.seed, "64-bit sampling seed")->required();
  cross->add_option("--workers", ce.workers, "Prediction threads")->capture_default_str()->check(CLI::PositiveNumber);
  cross->add_option("--reference", ce.reference, "Published row to print alongside")
      ->check(CLI::IsMember({"offenseval2020", "offenseval2019", "hate-offense"}));
  cross->add_option("--timeout-ms", ce.timeout_ms, "Adapter request timeout")->capture_default_str();
  cross->add_option("--out", ce.out, "Output directory")->required();

  TriageArgs ts, tr, tx;
  auto* triage_cmd = app.add_subcommand("triage", "Misclassification coding sessions");
  triage_cmd->require_subcommand(1);
  auto* sample = triage_cmd->add_subcommand("sample", "Draw a coding session from eval predictions");
  sample->add_option("--predictions", ts.predictions, "predictions.tsv written by eval")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--test", ts.test, "The test set the predictions refer to")->required()->check(CLI::ExistingFile);
  sample->add_option("--format", ts.format, "Test set format")
      ->capture_default_str()
      ->check(CLI::IsMember({"hateval-tsv", "olid", "davidson-csv"}));
  sample->add_option("--confidence", ts.confidence, "Confidence level in percent: 90, 95 or 99")
      ->capture_default_str()
      ->check(CLI::IsMember({90.0, 95.0, 99.0}));
  sample->add_option("--margin", ts.margin, "Margin of error in percent")->capture_default_str()->check(CLI::Range(0.0, 100.0));
  sample->add_option("--seed", ts.seed, "64-bit sampling seed")->required();
  sample->add_option("--session-id", ts.session_id, "Session id (derived from seed and items when omitted)");
  sample->add_option("--out", ts.out, "Session store directory")->required();

  auto* report = triage_cmd->add_subcommand("report", "Agreement and code frequencies of a session");
  report->add_option("--session", tr.session, "Session file")->required()->check(CLI::ExistingFile);
  report->add_option("--out", tr.out, "Output directory")->required();
  auto* exp = triage_cmd->add_subcommand("export", "Write agreed items as item_id,code CSV");
  exp->add_option("--session", tx.session, "Session file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", tx.out, "Output directory")->required();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "HTTP API for annotation sessions");
  serve->add_option("--store", sv.store, "Session store directory")->required();
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "Port (0 picks a free one)")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--static", sv.static_dir, "Built UI bundle served under /")->check(CLI::ExistingDirectory);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train_a) cmd_train_a(ta, train_a, out, err);
    else if (*train_b) cmd_train_b(tb, train_b, out, err);
    else if (*eval) cmd_eval(ev, eval, out, err);
    else if (*audit_cmd) cmd_audit(au, audit_cmd, out, err);
    else if (*adjust) cmd_adjust(ad, adjust, out, err);
    else if (*cross) cmd_cross_eval(ce, cross, out, err);
    else if (*sample) cmd_triage_sample(ts, sample, out, err);
    else if (*report) cmd_triage_report(tr, report, out, err);
    else if (*exp) cmd_triage_export(tx, exp, out, err);
    else if (*serve) cmd_serve(sv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace biasvote::cli
