#include "biasvote/crosseval.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "biasvote/error.hpp"

namespace biasvote::crosseval {

using nlohmann::json;

std::vector<double> batch_predict(const model::BinaryClassifier& m, std::span<const std::string> texts,
                                  std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, texts.size()));
  if (workers == 1) return m.predict_proba_batch(texts);

  std::vector<double> out(texts.size());
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (texts.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(texts.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        auto part = m.predict_proba_batch(texts.subspan(begin, end - begin));
        std::copy(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

CrossEvalRun cross_eval(const model::BinaryClassifier& m, const Dataset& d, const LabelMap& map,
                        std::optional<std::size_t> n, std::uint64_t seed, std::size_t workers) {
  if (d.empty()) throw InvalidArgument("cross_eval: dataset '" + d.name + "' is empty");
  const Dataset sample = sample_dataset(d, n.value_or(d.size()), seed);

  CrossEvalRun run;
  run.model_fingerprint = m.fingerprint();
  run.dataset_name = d.name;
  run.label_map = map;
  run.dataset_size = d.size();
  run.sample_size = sample.size();
  run.seed = seed;

  std::vector<std::string> texts;
  texts.reserve(sample.size());
  for (const auto& r : sample.records) {
    run.sample_ids.push_back(r.id);
    run.golds.push_back(hs_label(r));
    texts.push_back(r.text);
  }
  for (double p : batch_predict(m, texts, workers)) run.predictions.push_back(model::decide(p));
  run.report = metrics::prf(run.predictions, run.golds, metrics::Averaging::Weighted,
                            std::vector<int>{0, 1});
  return run;
}

json to_json(const CrossEvalRun& run) {
  return {{"model", run.model_fingerprint},
          {"dataset", run.dataset_name},
          {"label_map", run.label_map.entries()},
          {"dataset_size", run.dataset_size},
          {"sample_size", run.sample_size},
          {"seed", run.seed},
          {"report", metrics::to_json(run.report)}};
}

std::optional<metrics::TableRow> reference_row(const std::string& key) {
  if (key == "offenseval2020") return metrics::TableRow{"OffensEval2020 (reference)", 3887, 0.74, 0.72, 0.74, 0.68};
  if (key == "offenseval2019") return metrics::TableRow{"OffensEval2019 (reference)", 860, 0.68, 0.66, 0.68, 0.67};
  if (key == "hate-offense") return metrics::TableRow{"Hate & Offense (reference)", 2971, 0.70, 0.74, 0.70, 0.69};
  return std::nullopt;
}

std::string format_comparison(const CrossEvalRun& run, const std::optional<metrics::TableRow>& reference) {
  std::vector<metrics::TableRow> rows{metrics::table_row(run.dataset_name, run.report)};
  if (reference) rows.push_back(*reference);
  return metrics::format_table(rows);
}

}  // namespace biasvote::crosseval
