#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "earpipe/models/cnn.hpp"
#include "earpipe/models/forest.hpp"
#include "earpipe/models/knn.hpp"
#include "earpipe/models/svm.hpp"
#include "earpipe/normalize.hpp"

namespace earpipe::models {

enum class ModelKind { Svm, Knn, Rfc, Cnn };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

using AnyModel = std::variant<SvmModel, KnnModel, ForestModel, Cnn1d>;

ModelKind kind_of(const AnyModel& model);

struct StoredModel {
  AnyModel model;
  std::optional<NormalizationParams> normalizer;
  nlohmann::json provenance = nlohmann::json::object();
};

// Container file: JSON header with the kind tag and hyperparameters, payload of
// little-endian doubles holding the parameters.
void save_model(const StoredModel& stored, const std::filesystem::path& path);
StoredModel load_model(const std::filesystem::path& path);

nlohmann::json to_json(const NormalizationParams& params);
NormalizationParams normalization_from_json(const nlohmann::json& j);

}  // namespace earpipe::models
