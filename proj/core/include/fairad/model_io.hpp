#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fairad/trainer.hpp"

namespace fairad::model {

inline constexpr int kModelFormatVersion = 1;

/// JSON document: format_version, variant, config_hash, target {dim, radius,
/// seed}, encoder/decoder as lists of {in, out, activation, weight, bias}
/// (weights row-major), and the per-epoch history.
std::string model_to_json(const TrainedModel& model, std::uint64_t config_hash);
TrainedModel model_from_json(const std::string& text, std::uint64_t* config_hash = nullptr);

void save_model(const std::filesystem::path& path, const TrainedModel& model,
                std::uint64_t config_hash);
TrainedModel load_model(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

}  // namespace fairad::model
