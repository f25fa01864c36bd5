#pragma once

#include <filesystem>

#include <json.hpp>

#include "cqrf/forest.hpp"

namespace cqrf {

// Model document: {"format": "cqrf-forest", "version": 1, "config": {...},
// "training_n": n, "trees": [...]} with trees as nested nodes — internal
// {"feature", "threshold", "left", "right"}, leaf {"members"}. Keys
// serialize in sorted order, so a fixed forest always produces identical
// bytes. Honest split-half diagnostics are in-memory only and not stored.
nlohmann::json forest_to_json(const Forest& f);
Forest forest_from_json(const nlohmann::json& j);

void save_forest(const Forest& f, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace cqrf
