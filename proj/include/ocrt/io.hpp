#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ocrt/data_model.hpp"

namespace ocrt {

/// CSV with header `x1..xp,y1..yK`: columns named x* are features, y* targets.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

/// Feature-only CSV (every column a feature); y* columns are ignored.
Matrix read_features_csv(const std::filesystem::path& path);

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& header, const std::filesystem::path& path);

nlohmann::json to_json(const FeasibleSet& set);
FeasibleSet feasible_set_from_json(const nlohmann::json& doc);

FeasibleSet read_feasible_set(const std::filesystem::path& path);
void write_feasible_set(const FeasibleSet& set, const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ocrt
