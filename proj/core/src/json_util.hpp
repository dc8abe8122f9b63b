#pragma once

// Private JSON glue shared by the serialization-facing sources. Kept out of
// the public headers so installed consumers only need the squat headers.

#include "json.hpp"
#include "squat/model.hpp"

namespace squat {

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"d_v", c.d_v},
          {"d_h", c.d_h},
          {"d_g", c.d_g},
          {"d", c.d},
          {"heads", c.heads},
          {"layers", c.layers},
          {"mlp_ratio", c.mlp_ratio},
          {"esm_hidden", c.esm_hidden},
          {"num_object_classes", c.num_object_classes},
          {"num_predicates", c.num_predicates},
          {"bias", c.bias},
          {"ln_eps", c.ln_eps},
          {"esm_mode", to_string(c.esm_mode)},
          {"attention_mask", to_string(c.mask)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_v = j.at("d_v").get<int>();
  c.d_h = j.at("d_h").get<int>();
  c.d_g = j.at("d_g").get<int>();
  c.d = j.at("d").get<int>();
  c.heads = j.at("heads").get<int>();
  c.layers = j.at("layers").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  c.esm_hidden = j.at("esm_hidden").get<int>();
  c.num_object_classes = j.at("num_object_classes").get<int>();
  c.num_predicates = j.at("num_predicates").get<int>();
  c.bias = j.at("bias").get<bool>();
  c.ln_eps = j.at("ln_eps").get<double>();
  c.esm_mode = esm_mode_from_string(j.at("esm_mode").get<std::string>());
  c.mask = attention_mask_from_string(j.at("attention_mask").get<std::string>());
  return c;
}

}  // namespace squat
