#pragma once

#include <filesystem>

#include <json.hpp>

#include "biasvote/adapter.hpp"
#include "biasvote/ensemble.hpp"

namespace biasvote::bundle {

/// Ensemble bundle: a directory holding one model file per member plus
/// manifest.json (seeds, subset sizes, fallback flag, class table). A member
/// may instead name an adapter endpoint, in which case no file is written.

enum class Task { A, B };

inline constexpr int kBundleSchemaVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

Task bundle_task(const std::filesystem::path& dir);

/// `extra` is merged into the manifest under "extra" (e.g. training options).
void save_task_a(const ensemble::TaskAEnsemble& e, const std::filesystem::path& dir,
                 const nlohmann::json& extra = nlohmann::json::object());
ensemble::TaskAEnsemble load_task_a(const std::filesystem::path& dir,
                                    model::AdapterOptions adapter_options = {});

void save_task_b(const ensemble::TaskBModel& m, const std::filesystem::path& dir,
                 const nlohmann::json& extra = nlohmann::json::object());
ensemble::TaskBModel load_task_b(const std::filesystem::path& dir,
                                 model::AdapterOptions adapter_options = {});

nlohmann::json provenance_json(const ensemble::TaskAProvenance& p);

}  // namespace biasvote::bundle
