#include "biasvote/bundle.hpp"

#include <fstream>

#include "biasvote/checksum.hpp"
#include "biasvote/error.hpp"

namespace biasvote::bundle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestName, std::ios::binary);
  if (!in) throw ModelLoadError("no " + std::string(kManifestName) + " in " + dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelLoadError("cannot parse bundle manifest: " + std::string(e.what()));
  }
  const int version = j.value("schema_version", -1);
  if (version != kBundleSchemaVersion)
    throw VersionError("bundle schema version " + std::to_string(version) + " is not supported");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json save_member(const ensemble::ClassifierPtr& c, const std::string& name, const fs::path& dir) {
  if (const auto* lin = dynamic_cast<const model::LinearModel*>(c.get())) {
    const std::string file = "model_" + name + ".json";
    const std::string bytes = model::serialize(*lin);
    write_text(dir / file, bytes);
    return {{"name", name}, {"file", file}, {"sha256", sha256_hex(bytes)}};
  }
  if (const auto* ad = dynamic_cast<const model::AdapterClassifier*>(c.get()))
    return {{"name", name}, {"adapter", ad->endpoint()}};
  throw InvalidArgument("bundle member '" + name + "' is neither a linear model nor an adapter");
}

ensemble::ClassifierPtr load_member(const json& m, const fs::path& dir,
                                    const model::AdapterOptions& opts) {
  if (m.contains("adapter"))
    return std::make_shared<const model::AdapterClassifier>(m.at("adapter").get<std::string>(), opts);
  const fs::path file = dir / m.at("file").get<std::string>();
  if (m.contains("sha256") && sha256_file(file) != m.at("sha256").get<std::string>())
    throw ModelLoadError("checksum mismatch for " + file.string());
  return std::make_shared<const model::LinearModel>(model::load_model(file));
}

json manifest_head(const char* task) {
  return {{"schema_version", kBundleSchemaVersion}, {"task", task}};
}

}  // namespace

Task bundle_task(const fs::path& dir) {
  const auto task = read_manifest(dir).at("task").get<std::string>();
  if (task == "a") return Task::A;
  if (task == "b") return Task::B;
  throw ModelLoadError("unknown bundle task '" + task + "'");
}

json provenance_json(const ensemble::TaskAProvenance& p) {
  return {{"seed", p.seed},
          {"ratio", p.ratio},
          {"pos_major", {{"positives", p.pos_major_positives}, {"negatives", p.pos_major_negatives}}},
          {"neg_major", {{"positives", p.neg_major_positives}, {"negatives", p.neg_major_negatives}}},
          {"disagreement_raw", p.disagreement_raw},
          {"disagreement_size", p.disagreement_size},
          {"fallback", p.fallback},
          {"voter_seeds", p.voter_seeds}};
}

void save_task_a(const ensemble::TaskAEnsemble& e, const fs::path& dir, const json& extra) {
  fs::create_directories(dir);
  json j = manifest_head("a");
  j["members"] = json::array();
  const char* names[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < 3; ++i) j["members"].push_back(save_member(e.voters()[i], names[i], dir));
  j["provenance"] = provenance_json(e.provenance());
  j["extra"] = extra;
  write_text(dir / kManifestName, j.dump(2) + "\n");
}

ensemble::TaskAEnsemble load_task_a(const fs::path& dir, model::AdapterOptions opts) {
  const json j = read_manifest(dir);
  if (j.at("task") != "a") throw ModelLoadError(dir.string() + " is not a Task A bundle");
  const auto& members = j.at("members");
  if (members.size() != 3) throw ModelLoadError("Task A bundle must list three members");
  std::array<ensemble::ClassifierPtr, 3> voters;
  for (std::size_t i = 0; i < 3; ++i) voters[i] = load_member(members[i], dir, opts);

  ensemble::TaskAProvenance p;
  if (j.contains("provenance")) {
    const auto& q = j["provenance"];
    p.seed = q.value("seed", std::uint64_t{0});
    p.ratio = q.value("ratio", 2.0);
    p.pos_major_positives = q.at("pos_major").value("positives", std::size_t{0});
    p.pos_major_negatives = q.at("pos_major").value("negatives", std::size_t{0});
    p.neg_major_positives = q.at("neg_major").value("positives", std::size_t{0});
    p.neg_major_negatives = q.at("neg_major").value("negatives", std::size_t{0});
    p.disagreement_raw = q.value("disagreement_raw", std::size_t{0});
    p.disagreement_size = q.value("disagreement_size", std::size_t{0});
    p.fallback = q.value("fallback", false);
    if (q.contains("voter_seeds")) p.voter_seeds = q["voter_seeds"].get<std::array<std::uint64_t, 3>>();
  }
  return ensemble::TaskAEnsemble(voters, p);
}

void save_task_b(const ensemble::TaskBModel& m, const fs::path& dir, const json& extra) {
  fs::create_directories(dir);
  json j = manifest_head("b");
  j["members"] = json::array();
  for (std::size_t k = 0; k < 5; ++k)
    j["members"].push_back(save_member(m.classifiers()[k], "class" + std::to_string(k), dir));
  j["class_table"] = json::array();
  for (const auto& t : ensemble::kClassTable) j["class_table"].push_back({t.hs, t.tr, t.ag});
  j["rule"] = ensemble::rule_name(m.rule());
  j["warnings"] = m.warnings();
  j["extra"] = extra;
  write_text(dir / kManifestName, j.dump(2) + "\n");
}

ensemble::TaskBModel load_task_b(const fs::path& dir, model::AdapterOptions opts) {
  const json j = read_manifest(dir);
  if (j.at("task") != "b") throw ModelLoadError(dir.string() + " is not a Task B bundle");
  const auto& table = j.at("class_table");
  if (table.size() != 5) throw ModelLoadError("Task B class table must have five rows");
  for (std::size_t k = 0; k < 5; ++k) {
    LabelTriple t{table[k].at(0).get<int>(), table[k].at(1).get<int>(), table[k].at(2).get<int>()};
    if (t != ensemble::kClassTable[k]) throw ModelLoadError("Task B class table does not match");
  }
  const auto& members = j.at("members");
  if (members.size() != 5) throw ModelLoadError("Task B bundle must list five members");
  std::array<ensemble::ClassifierPtr, 5> cls;
  for (std::size_t k = 0; k < 5; ++k) cls[k] = load_member(members[k], dir, opts);
  return ensemble::TaskBModel(cls, j.value("warnings", std::vector<std::string>{}),
                              ensemble::parse_rule(j.value("rule", std::string("least-confident-negative"))));
}

}  // namespace biasvote::bundle
