#include "fairad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairad/error.hpp"
#include "fairad/rng.hpp"

namespace fairad::model {

namespace {

// Stream indices for derive_seed.
constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kDecoderStream = 2;
constexpr std::uint64_t kTargetStream = 3;
constexpr std::uint64_t kBatchStream = 1000;

std::vector<std::vector<std::size_t>> members_by_group(std::span<const int> groups) {
  int k = 0;
  for (int g : groups) {
    if (g < 0) throw DataError("group ids must be non-negative");
    k = std::max(k, g + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < groups.size(); ++i) members[static_cast<std::size_t>(groups[i])].push_back(i);
  return members;
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::Im ? "Im" : "Ex"; }

Variant variant_from_string(std::string_view name) {
  if (name == "Im" || name == "im" || name == "Im-FairAD") return Variant::Im;
  if (name == "Ex" || name == "ex" || name == "Ex-FairAD") return Variant::Ex;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected Im or Ex)");
}

void TrainConfig::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("train config: beta must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("train config: lambda must be >= 0");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("train config: learning_rate must be >= 0");
  if (min_group_batch < 1) throw ConfigError("train config: min_group_batch must be >= 1");
  divergence.sinkhorn.validate();
  target.validate();
}

TrainedModel initialize_model(Variant variant, std::size_t input_dim, const TrainConfig& cfg) {
  cfg.validate();
  if (input_dim == 0) throw ConfigError("initialize_model: input dim must be >= 1");
  const auto& arch = cfg.architecture;
  std::vector<std::size_t> enc_widths{input_dim};
  enc_widths.insert(enc_widths.end(), arch.encoder_hidden.begin(), arch.encoder_hidden.end());
  enc_widths.push_back(cfg.target.dim);
  std::vector<std::size_t> dec_widths{cfg.target.dim};
  dec_widths.insert(dec_widths.end(), arch.decoder_hidden.begin(), arch.decoder_hidden.end());
  dec_widths.push_back(input_dim);

  TrainedModel m;
  m.variant = variant;
  m.encoder = nn::make_mlp(enc_widths, derive_seed(cfg.seed, kEncoderStream), arch.hidden_activation);
  m.decoder = nn::make_mlp(dec_widths, derive_seed(cfg.seed, kDecoderStream), arch.hidden_activation);
  m.encoder_opt = nn::AdamState::for_params(m.encoder, cfg.learning_rate);
  m.decoder_opt = nn::AdamState::for_params(m.decoder, cfg.learning_rate);
  m.target = cfg.target;
  m.target.seed = derive_seed(cfg.seed ^ cfg.target.seed, kTargetStream);
  return m;
}

std::vector<std::vector<std::size_t>> stratified_batches(std::span<const int> groups,
                                                         std::size_t batch_size,
                                                         std::size_t min_per_group, Rng& rng) {
  if (batch_size < 1 || min_per_group < 1) throw ConfigError("stratified_batches: sizes must be >= 1");
  auto members = members_by_group(groups);
  const std::size_t n = groups.size();
  if (n == 0) return {};
  std::size_t count = (n + batch_size - 1) / batch_size;
  for (const auto& m : members) {
    if (m.size() >= min_per_group) count = std::min(count, m.size() / min_per_group);
  }
  count = std::max<std::size_t>(count, 1);
  for (auto& m : members) rng.shuffle(m);

  std::vector<std::vector<std::size_t>> batches(count);
  for (const auto& m : members) {
    if (m.empty()) continue;
    if (m.size() < min_per_group) {
      for (auto& b : batches) b.insert(b.end(), m.begin(), m.end());
      continue;
    }
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t lo = m.size() * b / count;
      const std::size_t hi = m.size() * (b + 1) / count;
      batches[b].insert(batches[b].end(), m.begin() + static_cast<std::ptrdiff_t>(lo),
                        m.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  return batches;
}

void continue_training(TrainedModel& model, const Matrix& x, std::span<const int> groups,
                       const TrainConfig& cfg, const EpochObserver& observer) {
  cfg.validate();
  if (x.rows() != groups.size()) {
    throw ShapeError("train: " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(groups.size()) + " group ids");
  }
  if (x.cols() != model.input_dim()) {
    throw ShapeError("train: data has shape " + x.shape_string() + " but the model expects " +
                     std::to_string(model.input_dim()) + " columns");
  }
  if (!x.all_finite()) throw NumericalError("train: feature matrix has non-finite entries");
  const auto members = members_by_group(groups);
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty()) throw DataError("train: group " + std::to_string(s) + " has no rows");
  }
  if (members.empty()) throw DataError("train: no training rows");
  if (model.variant == Variant::Ex && members.size() < 2) {
    throw DataError("train: the explicit variant needs at least 2 groups");
  }
  model.encoder_opt.learning_rate = cfg.learning_rate;
  model.decoder_opt.learning_rate = cfg.learning_rate;

  const std::size_t k = members.size();
  const std::size_t start = model.history.size();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = start + e;
    TargetDistribution pool_dist = model.target;
    if (cfg.resample_target) pool_dist.seed = derive_seed(model.target.seed, epoch);
    const Matrix pool = sample_target(pool_dist, x.rows());

    Rng batch_rng(derive_seed(cfg.seed, kBatchStream + epoch));
    const auto batches = stratified_batches(groups, cfg.batch_size, cfg.min_group_batch, batch_rng);

    EpochStats stats;
    stats.group_transport_cost.assign(model.variant == Variant::Im ? k : 1, 0.0);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      LossResult loss;
      if (model.variant == Variant::Im) {
        std::vector<std::vector<std::size_t>> per(k);
        for (auto i : batch) per[static_cast<std::size_t>(groups[i])].push_back(i);
        std::vector<Matrix> xs, zs;
        for (std::size_t s = 0; s < k; ++s) {
          xs.push_back(x.gather_rows(per[s]));
          zs.push_back(pool.gather_rows(per[s]));
        }
        loss = im_fairad_loss(xs, zs, model.encoder, model.decoder, cfg.beta, cfg.divergence);
      } else {
        std::vector<int> gb(batch.size());
        for (std::size_t q = 0; q < batch.size(); ++q) gb[q] = groups[batch[q]];
        loss = ex_fairad_loss(x.gather_rows(batch), gb, pool.gather_rows(batch), model.encoder,
                              model.decoder, cfg.beta, cfg.lambda, cfg.divergence);
      }
      if (!std::isfinite(loss.loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b));
      }
      try {
        nn::adam_step(model.encoder, model.encoder_opt, loss.encoder_grad);
        nn::adam_step(model.decoder, model.decoder_opt, loss.decoder_grad);
      } catch (const NumericalError& err) {
        throw NumericalError(std::string(err.what()) + " (epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b) + ")");
      }
      stats.sinkhorn_total += loss.parts.sinkhorn_total;
      stats.reconstruction += loss.parts.reconstruction;
      stats.fairness_term += loss.parts.fairness_term;
      for (std::size_t s = 0; s < stats.group_transport_cost.size(); ++s) {
        stats.group_transport_cost[s] += loss.parts.group_transport_cost[s];
      }
      if (!loss.parts.sinkhorn_converged) ++stats.unconverged_batches;
    }
    const double nb = static_cast<double>(batches.size());
    stats.batches = batches.size();
    stats.sinkhorn_total /= nb;
    stats.reconstruction /= nb;
    stats.fairness_term /= nb;
    for (double& c : stats.group_transport_cost) c /= nb;
    stats.total = stats.sinkhorn_total + stats.reconstruction + stats.fairness_term;
    model.history.push_back(stats);
    if (observer) observer(epoch, stats);
  }
}

TrainedModel train(Variant variant, const Matrix& x, std::span<const int> groups,
                   const TrainConfig& cfg, const EpochObserver& observer) {
  TrainedModel model = initialize_model(variant, x.cols(), cfg);
  continue_training(model, x, groups, cfg, observer);
  return model;
}

std::vector<double> score(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("score: data has shape " + x.shape_string() + " but the model expects " +
                     std::to_string(model.input_dim()) + " columns");
  }
  return anomaly_score(nn::mlp_apply(model.encoder, x));
}

ScoreTable score_dataset(const TrainedModel& model, const Matrix& x, std::span<const int> groups,
                         std::optional<std::vector<int>> labels) {
  ScoreTable t;
  t.scores = score(model, x);
  t.group_ids.assign(groups.begin(), groups.end());
  t.labels = std::move(labels);
  t.validate();
  return t;
}

std::vector<double> group_transport_costs(const TrainedModel& model, const Matrix& x,
                                          std::span<const int> groups,
                                          std::span<const Matrix> targets,
                                          const ot::SinkhornConfig& cfg) {
  const auto members = members_by_group(groups);
  if (targets.size() != members.size()) {
    throw ShapeError("group_transport_costs: " + std::to_string(members.size()) + " groups but " +
                     std::to_string(targets.size()) + " target samples");
  }
  const Matrix e = nn::mlp_apply(model.encoder, x);
  std::vector<double> out;
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty()) throw DataError("group_transport_costs: group " + std::to_string(s) + " is empty");
    out.push_back(ot::sinkhorn_distance(e.gather_rows(members[s]), targets[s], cfg).transport_cost);
  }
  return out;
}

}  // namespace fairad::model
