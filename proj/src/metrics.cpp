#include "biasvote/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace biasvote::metrics {

using nlohmann::json;

ConfusionTable confusion(std::span<const int> preds, std::span<const int> golds,
                         const std::vector<int>& alphabet) {
  ConfusionTable t;
  t.total = preds.size();
  std::map<int, std::size_t> slot;
  for (int label : alphabet) {
    slot.emplace(label, t.classes.size());
    t.classes.push_back({label});
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], g = golds[i];
    if (!slot.count(p) || !slot.count(g)) throw InvalidArgument("label outside the class alphabet");
    if (p == g) {
      ++t.classes[slot[p]].tp;
    } else {
      ++t.classes[slot[p]].fp;
      ++t.classes[slot[g]].fn;
    }
  }
  for (auto& c : t.classes) c.tn = t.total - c.tp - c.fp - c.fn;
  return t;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport prf(std::span<const int> preds, std::span<const int> golds, Averaging averaging,
                  std::optional<std::vector<int>> alphabet) {
  if (preds.size() != golds.size())
    throw InvalidArgument("prf: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(golds.size()) + " gold labels");
  if (preds.empty()) throw InvalidArgument("prf: empty evaluation set");
  if (!alphabet) {
    std::set<int> labels(preds.begin(), preds.end());
    labels.insert(golds.begin(), golds.end());
    alphabet.emplace(labels.begin(), labels.end());
  }
  const auto table = confusion(preds, golds, *alphabet);

  MetricsReport r;
  r.averaging = averaging;
  r.sample_size = preds.size();
  std::size_t correct = 0;
  for (const auto& c : table.classes) {
    ClassScores s;
    s.label = c.label;
    s.support = c.support();
    s.precision = ratio(c.tp, c.tp + c.fp);
    s.recall = ratio(c.tp, c.tp + c.fn);
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    correct += c.tp;
    r.per_class.push_back(s);
  }
  const double k = static_cast<double>(r.per_class.size());
  const double n = static_cast<double>(preds.size());
  for (const auto& s : r.per_class) {
    r.macro.precision += s.precision / k;
    r.macro.recall += s.recall / k;
    r.macro.f1 += s.f1 / k;
    const double w = static_cast<double>(s.support) / n;
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
  }
  r.accuracy = static_cast<double>(correct) / n;
  return r;
}

double emr(std::span<const LabelTriple> preds, std::span<const LabelTriple> golds) {
  if (preds.size() != golds.size())
    throw InvalidArgument("emr: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(golds.size()) + " gold triples");
  if (preds.empty()) throw InvalidArgument("emr: empty evaluation set");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++exact;
  return static_cast<double>(exact) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------

double z_value(Confidence c) noexcept {
  switch (c) {
    case Confidence::P90: return 1.645;
    case Confidence::P95: return 1.96;
    case Confidence::P99: return 2.576;
  }
  return 1.96;
}

Confidence parse_confidence(double percent) {
  if (percent == 90.0) return Confidence::P90;
  if (percent == 95.0) return Confidence::P95;
  if (percent == 99.0) return Confidence::P99;
  throw InvalidArgument("confidence level must be 90, 95 or 99 percent");
}

std::uint64_t sample_size(const SampleSpec& spec) {
  if (spec.population == 0) throw InvalidArgument("sample_size: population must be positive");
  if (!(spec.margin_percent > 0.0) || spec.margin_percent > 100.0)
    throw InvalidArgument("sample_size: margin must be in (0, 100] percent");
  if (!(spec.proportion > 0.0) || !(spec.proportion < 1.0))
    throw InvalidArgument("sample_size: proportion must be in (0, 1)");
  const double z = z_value(spec.confidence);
  const double d = spec.margin_percent / 100.0;
  const double n0 = z * z * spec.proportion * (1.0 - spec.proportion) / (d * d);
  const double N = static_cast<double>(spec.population);
  const double n = std::ceil(n0 / (1.0 + (n0 - 1.0) / N));
  if (n >= N) return spec.population;
  return n < 1.0 ? 1 : static_cast<std::uint64_t>(n);
}

// ---------------------------------------------------------------------------

json to_json(const MetricsReport& r) {
  json classes = json::array();
  for (const auto& c : r.per_class)
    classes.push_back({{"label", c.label},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support}});
  json j = {{"per_class", classes},
            {"macro", {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}}},
            {"weighted",
             {{"precision", r.weighted.precision}, {"recall", r.weighted.recall}, {"f1", r.weighted.f1}}},
            {"accuracy", r.accuracy},
            {"sample_size", r.sample_size},
            {"averaging", r.averaging == Averaging::Macro ? "macro" : "weighted"}};
  if (r.emr) j["emr"] = *r.emr;
  return j;
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidArgument("average_reports: nothing to average");
  MetricsReport out;
  out.averaging = reports.front().averaging;
  const double k = static_cast<double>(reports.size());
  bool all_emr = true;
  double emr_sum = 0.0;
  std::map<int, std::pair<ClassScores, std::size_t>> per_class;
  for (const auto& r : reports) {
    auto add = [k](Aggregate& dst, const Aggregate& src) {
      dst.precision += src.precision / k;
      dst.recall += src.recall / k;
      dst.f1 += src.f1 / k;
    };
    add(out.macro, r.macro);
    add(out.weighted, r.weighted);
    out.accuracy += r.accuracy / k;
    out.sample_size += r.sample_size;
    if (r.emr)
      emr_sum += *r.emr;
    else
      all_emr = false;
    for (const auto& c : r.per_class) {
      auto& [acc, seen] = per_class[c.label];
      acc.label = c.label;
      acc.precision += c.precision;
      acc.recall += c.recall;
      acc.f1 += c.f1;
      acc.support += c.support;
      ++seen;
    }
  }
  if (all_emr) out.emr = emr_sum / k;
  for (auto& [label, entry] : per_class) {
    auto& [acc, seen] = entry;
    const double s = static_cast<double>(seen);
    acc.precision /= s;
    acc.recall /= s;
    acc.f1 /= s;
    out.per_class.push_back(acc);
  }
  return out;
}

TableRow table_row(const std::string& dataset, const MetricsReport& r) {
  const auto& h = r.headline();
  return {dataset, r.sample_size, r.accuracy, h.precision, h.recall, h.f1};
}

std::string format_table(std::span<const TableRow> rows) {
  std::size_t name_w = std::string("Dataset").size();
  std::size_t n_w = std::string("Sample size").size();
  for (const auto& r : rows) {
    name_w = std::max(name_w, r.dataset.size());
    n_w = std::max(n_w, std::to_string(r.sample_size).size());
  }
  std::ostringstream out;
  auto rule = [&] { out << std::string(name_w + 2 + n_w + 4 * 7, '-') << '\n'; };
  rule();
  out << std::left << std::setw(static_cast<int>(name_w)) << "Dataset" << "  " << std::right
      << std::setw(static_cast<int>(n_w)) << "Sample size";
  for (const char* h : {"Acc.", "P", "R", "F1"}) out << "  " << std::setw(5) << h;
  out << '\n';
  rule();
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.dataset << "  " << std::right
        << std::setw(static_cast<int>(n_w)) << r.sample_size;
    for (double v : {r.accuracy, r.precision, r.recall, r.f1}) out << "  " << std::setw(5) << v;
    out << '\n';
  }
  rule();
  return out.str();
}

}  // namespace biasvote::metrics
