#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fairad/adam.hpp"
#include "fairad/matrix.hpp"
#include "fairad/mlp.hpp"
#include "fairad/objectives.hpp"
#include "fairad/target.hpp"

namespace fairad::model {

enum class Variant { Im, Ex };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view name);

struct Architecture {
  std::vector<std::size_t> encoder_hidden{64, 32};
  std::vector<std::size_t> decoder_hidden{32, 64};
  nn::Activation hidden_activation = nn::Activation::ReLU;
};

struct TrainConfig {
  double beta = 1.0;
  double lambda = 1.0;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  DivergenceConfig divergence{};
  TargetDistribution target = make_target(8, 0);
  bool resample_target = true;
  std::size_t min_group_batch = 8;
  Architecture architecture{};

  void validate() const;
};

struct EpochStats {
  double total = 0.0;
  double sinkhorn_total = 0.0;
  double reconstruction = 0.0;
  double fairness_term = 0.0;
  std::vector<double> group_transport_cost;
  std::size_t batches = 0;
  std::size_t unconverged_batches = 0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainedModel {
  Variant variant = Variant::Im;
  nn::MlpParams encoder;
  nn::MlpParams decoder;
  nn::AdamState encoder_opt;
  nn::AdamState decoder_opt;
  TargetDistribution target;
  std::vector<EpochStats> history;

  std::size_t input_dim() const { return encoder.in_dim(); }
};

/// Fresh encoder/decoder for `input_dim` features, seeded from cfg.seed.
TrainedModel initialize_model(Variant variant, std::size_t input_dim, const TrainConfig& cfg);

/// Batches of row indices, each containing every group in proportion to its
/// size with at least `min_per_group` rows per group (or the whole group if it
/// is smaller). Order is drawn from `rng`.
std::vector<std::vector<std::size_t>> stratified_batches(std::span<const int> groups,
                                                         std::size_t batch_size,
                                                         std::size_t min_per_group, Rng& rng);

using EpochObserver = std::function<void(std::size_t epoch, const EpochStats&)>;

/// Minibatch Adam on the chosen objective. Labels are never consulted: rows
/// are treated as unlabeled training data. Deterministic given cfg.seed.
TrainedModel train(Variant variant, const Matrix& x, std::span<const int> groups,
                   const TrainConfig& cfg, const EpochObserver& observer = {});

/// Continue training an existing model for cfg.epochs more epochs.
void continue_training(TrainedModel& model, const Matrix& x, std::span<const int> groups,
                       const TrainConfig& cfg, const EpochObserver& observer = {});

std::vector<double> score(const TrainedModel& model, const Matrix& x);

ScoreTable score_dataset(const TrainedModel& model, const Matrix& x, std::span<const int> groups,
                         std::optional<std::vector<int>> labels = std::nullopt);

/// <P, C> between each group's embedding and the matching target sample,
/// solved with `cfg`.
std::vector<double> group_transport_costs(const TrainedModel& model, const Matrix& x,
                                          std::span<const int> groups,
                                          std::span<const Matrix> targets,
                                          const ot::SinkhornConfig& cfg);

}  // namespace fairad::model
