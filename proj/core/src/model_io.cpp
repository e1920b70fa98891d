#include "fairad/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairad/error.hpp"

namespace fairad::model {

using nlohmann::json;

namespace {

json mlp_to_json(const nn::MlpParams& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", nn::to_string(l.activation)},
                      {"weight", std::vector<double>(l.weight.data().begin(), l.weight.data().end())},
                      {"bias", l.bias}});
  }
  return layers;
}

nn::MlpParams mlp_from_json(const json& j, const char* which) {
  nn::MlpParams p;
  for (const auto& jl : j) {
    const auto in = jl.at("in").get<std::size_t>();
    const auto out = jl.at("out").get<std::size_t>();
    auto weight = jl.at("weight").get<std::vector<double>>();
    if (weight.size() != in * out) {
      throw ParseError(std::string("model: ") + which + " weight has " + std::to_string(weight.size()) +
                       " values, expected " + std::to_string(in * out));
    }
    nn::Layer layer;
    layer.weight = Matrix(out, in, std::move(weight));
    layer.bias = jl.at("bias").get<std::vector<double>>();
    if (layer.bias.size() != out) throw ParseError(std::string("model: ") + which + " bias length mismatch");
    layer.activation = nn::activation_from_string(jl.at("activation").get<std::string>());
    p.layers.push_back(std::move(layer));
  }
  p.validate();
  return p;
}

json adam_to_json(const nn::AdamState& s) {
  return {{"step", s.step},          {"learning_rate", s.learning_rate}, {"beta1", s.beta1},
          {"beta2", s.beta2},        {"epsilon", s.epsilon},             {"m", s.first_moment},
          {"v", s.second_moment}};
}

nn::AdamState adam_from_json(const json& j) {
  nn::AdamState s;
  s.step = j.at("step").get<std::size_t>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.first_moment = j.at("m").get<std::vector<double>>();
  s.second_moment = j.at("v").get<std::vector<double>>();
  return s;
}

}  // namespace

std::string model_to_json(const TrainedModel& model, std::uint64_t config_hash) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["variant"] = to_string(model.variant);
  j["config_hash"] = config_hash;
  j["target"] = {{"dim", model.target.dim}, {"radius", model.target.radius}, {"seed", model.target.seed}};
  j["encoder"] = mlp_to_json(model.encoder);
  j["decoder"] = mlp_to_json(model.decoder);
  j["encoder_opt"] = adam_to_json(model.encoder_opt);
  j["decoder_opt"] = adam_to_json(model.decoder_opt);
  json hist = json::array();
  for (const auto& e : model.history) {
    hist.push_back({{"total", e.total},
                    {"sinkhorn_total", e.sinkhorn_total},
                    {"reconstruction", e.reconstruction},
                    {"fairness_term", e.fairness_term},
                    {"group_transport_cost", e.group_transport_cost},
                    {"batches", e.batches},
                    {"unconverged_batches", e.unconverged_batches}});
  }
  j["history"] = std::move(hist);
  return j.dump(2);
}

TrainedModel model_from_json(const std::string& text, std::uint64_t* config_hash) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("model: unsupported format_version " + std::to_string(version));
    }
    TrainedModel m;
    m.variant = variant_from_string(j.at("variant").get<std::string>());
    if (config_hash) *config_hash = j.at("config_hash").get<std::uint64_t>();
    const auto& t = j.at("target");
    m.target.dim = t.at("dim").get<std::size_t>();
    m.target.radius = t.at("radius").get<double>();
    m.target.seed = t.at("seed").get<std::uint64_t>();
    m.target.validate();
    m.encoder = mlp_from_json(j.at("encoder"), "encoder");
    m.decoder = mlp_from_json(j.at("decoder"), "decoder");
    if (m.encoder.out_dim() != m.target.dim || m.decoder.in_dim() != m.target.dim ||
        m.decoder.out_dim() != m.encoder.in_dim()) {
      throw ParseError("model: encoder/decoder/target dimensions do not agree");
    }
    m.encoder_opt = adam_from_json(j.at("encoder_opt"));
    m.decoder_opt = adam_from_json(j.at("decoder_opt"));
    for (const auto& e : j.at("history")) {
      EpochStats s;
      s.total = e.at("total").get<double>();
      s.sinkhorn_total = e.at("sinkhorn_total").get<double>();
      s.reconstruction = e.at("reconstruction").get<double>();
      s.fairness_term = e.at("fairness_term").get<double>();
      s.group_transport_cost = e.at("group_transport_cost").get<std::vector<double>>();
      s.batches = e.at("batches").get<std::size_t>();
      s.unconverged_batches = e.at("unconverged_batches").get<std::size_t>();
      m.history.push_back(std::move(s));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model,
                std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << model_to_json(model, config_hash) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), config_hash);
}

}  // namespace fairad::model
