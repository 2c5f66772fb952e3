// Copyright 2026 The c2f Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "c2f/config.hpp"

#include <functional>
#include <map>

#include "c2f/error.hpp"
#include "c2f/io_util.hpp"

using nlohmann::json;

namespace c2f {

namespace {

struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ConfigError("config key '" + key + "' expects " + expected);
}

int as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) bad_type(key, "an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const std::string& key, const json& v) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    bad_type(key, "a non-negative integer");
  return v.get<std::uint64_t>();
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad_type(key, "a number");
  return v.get<double>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad_type(key, "true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_type(key, "a string");
  return v.get<std::string>();
}

std::map<std::string, Field> build_fields() {
  std::map<std::string, Field> f;
  auto add_int = [&](const std::string& key, auto pick) {
    f[key] = {[pick](const RunConfig& c) { return json(pick(const_cast<RunConfig&>(c))); },
              [pick, key](RunConfig& c, const json& v) { pick(c) = as_int(key, v); }};
  };
  auto add_u64 = [&](const std::string& key, auto pick) {
    f[key] = {[pick](const RunConfig& c) { return json(pick(const_cast<RunConfig&>(c))); },
              [pick, key](RunConfig& c, const json& v) { pick(c) = as_u64(key, v); }};
  };
  auto add_double = [&](const std::string& key, auto pick) {
    f[key] = {[pick](const RunConfig& c) { return json(pick(const_cast<RunConfig&>(c))); },
              [pick, key](RunConfig& c, const json& v) { pick(c) = as_double(key, v); }};
  };
  auto add_bool = [&](const std::string& key, auto pick) {
    f[key] = {[pick](const RunConfig& c) { return json(pick(const_cast<RunConfig&>(c))); },
              [pick, key](RunConfig& c, const json& v) { pick(c) = as_bool(key, v); }};
  };
  auto add_enum = [&](const std::string& key, auto get, auto set) {
    f[key] = {[get](const RunConfig& c) { return json(std::string(get(c))); },
              [set, key](RunConfig& c, const json& v) { set(c, as_string(key, v)); }};
  };

  // data.*
  add_u64("data.seed", [](RunConfig& c) -> auto& { return c.data.seed; });
  add_int("data.n_train", [](RunConfig& c) -> auto& { return c.data.n_train; });
  add_int("data.n_val", [](RunConfig& c) -> auto& { return c.data.n_val; });
  add_int("data.n_test", [](RunConfig& c) -> auto& { return c.data.n_test; });
  add_int("data.n_blobs_min", [](RunConfig& c) -> auto& { return c.data.n_blobs_min; });
  add_int("data.n_blobs_max", [](RunConfig& c) -> auto& { return c.data.n_blobs_max; });
  add_int("data.height", [](RunConfig& c) -> auto& { return c.data.scene.height; });
  add_int("data.width", [](RunConfig& c) -> auto& { return c.data.scene.width; });
  add_double("data.coverage_median", [](RunConfig& c) -> auto& { return c.data.scene.coverage_median; });
  add_double("data.coverage_log_sigma",
             [](RunConfig& c) -> auto& { return c.data.scene.coverage_log_sigma; });
  add_double("data.roughness_min",
             [](RunConfig& c) -> auto& { return c.data.scene.fine_roughness_target.lo; });
  add_double("data.roughness_max",
             [](RunConfig& c) -> auto& { return c.data.scene.fine_roughness_target.hi; });
  add_int("data.max_attempts", [](RunConfig& c) -> auto& { return c.data.scene.max_attempts; });
  add_int("data.coarsen_dilate_radius",
          [](RunConfig& c) -> auto& { return c.data.scene.coarsen_dilate_radius; });
  add_int("data.coarsen_simplify", [](RunConfig& c) -> auto& { return c.data.scene.coarsen_simplify; });
  add_double("data.noise_sigma", [](RunConfig& c) -> auto& { return c.data.scene.noise_sigma; });
  add_double("data.texture_amplitude",
             [](RunConfig& c) -> auto& { return c.data.scene.texture_amplitude; });
  add_double("data.confounder_strength",
             [](RunConfig& c) -> auto& { return c.data.scene.confounder_strength; });
  f["data.band_contrasts"] = {
      [](const RunConfig& c) { return json(c.data.scene.band_contrasts); },
      [](RunConfig& c, const json& v) {
        const std::string key = "data.band_contrasts";
        if (!v.is_array() || v.size() != kNumBands) bad_type(key, "an array of 6 numbers");
        for (int b = 0; b < kNumBands; ++b) c.data.scene.band_contrasts[b] = as_double(key, v[b]);
      }};

  // model.*
  add_int("model.in_channels", [](RunConfig& c) -> auto& { return c.train.model.in_channels; });
  add_int("model.base_channels", [](RunConfig& c) -> auto& { return c.train.model.base_channels; });
  add_int("model.depth", [](RunConfig& c) -> auto& { return c.train.model.depth; });
  add_int("model.fpn_channels", [](RunConfig& c) -> auto& { return c.train.model.fpn_channels; });
  add_int("model.cbam_reduction", [](RunConfig& c) -> auto& { return c.train.model.cbam_reduction; });
  add_int("model.cbam_spatial_kernel",
          [](RunConfig& c) -> auto& { return c.train.model.cbam_spatial_kernel; });
  add_int("model.diffusion_steps", [](RunConfig& c) -> auto& { return c.train.model.diffusion_steps; });
  add_bool("model.gated_fusion",
           [](RunConfig& c) -> auto& { return c.train.model.components.gated_fusion; });
  add_bool("model.cbam", [](RunConfig& c) -> auto& { return c.train.model.components.cbam; });
  add_bool("model.diffusion_refinement",
           [](RunConfig& c) -> auto& { return c.train.model.components.diffusion_refinement; });
  add_enum(
      "model.gate_mode",
      [](const RunConfig& c) {
        return c.train.model.gate_mode == GateMode::PerChannel ? "per_channel" : "shared";
      },
      [](RunConfig& c, const std::string& s) {
        if (s == "per_channel") c.train.model.gate_mode = GateMode::PerChannel;
        else if (s == "shared") c.train.model.gate_mode = GateMode::Shared;
        else throw ConfigError("config key 'model.gate_mode' expects per_channel or shared");
      });
  f["model.inject_stages"] = {
      [](const RunConfig& c) { return json(c.train.model.inject_stages); },
      [](RunConfig& c, const json& v) {
        const std::string key = "model.inject_stages";
        if (!v.is_array()) bad_type(key, "an array of stage numbers");
        c.train.model.inject_stages.clear();
        for (const auto& s : v) c.train.model.inject_stages.push_back(as_int(key, s));
      }};

  // train.*
  add_int("train.epochs", [](RunConfig& c) -> auto& { return c.train.epochs; });
  add_int("train.batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; });
  add_double("train.lr", [](RunConfig& c) -> auto& { return c.train.lr; });
  add_double("train.weight_decay", [](RunConfig& c) -> auto& { return c.train.weight_decay; });
  add_int("train.warmup_epochs", [](RunConfig& c) -> auto& { return c.train.warmup_epochs; });
  add_int("train.plateau_patience", [](RunConfig& c) -> auto& { return c.train.plateau_patience; });
  add_double("train.plateau_factor", [](RunConfig& c) -> auto& { return c.train.plateau_factor; });
  add_double("train.lr_floor", [](RunConfig& c) -> auto& { return c.train.lr_floor; });
  add_int("train.early_stop_patience",
          [](RunConfig& c) -> auto& { return c.train.early_stop_patience; });
  add_u64("train.seed", [](RunConfig& c) -> auto& { return c.train.seed; });
  add_double("train.grad_clip", [](RunConfig& c) -> auto& { return c.train.grad_clip; });
  add_bool("train.warm_start", [](RunConfig& c) -> auto& { return c.train.warm_start; });
  add_bool("train.augment", [](RunConfig& c) -> auto& { return c.train.augment.enabled; });
  add_double("train.augment.p_hflip", [](RunConfig& c) -> auto& { return c.train.augment.p_hflip; });
  add_double("train.augment.p_vflip", [](RunConfig& c) -> auto& { return c.train.augment.p_vflip; });
  add_double("train.augment.p_rot90", [](RunConfig& c) -> auto& { return c.train.augment.p_rot90; });
  add_double("train.augment.p_ssr", [](RunConfig& c) -> auto& { return c.train.augment.p_ssr; });
  add_double("train.augment.scale_limit",
             [](RunConfig& c) -> auto& { return c.train.augment.scale_limit; });
  add_double("train.augment.rotate_limit",
             [](RunConfig& c) -> auto& { return c.train.augment.rotate_limit; });
  add_double("train.augment.shift_limit",
             [](RunConfig& c) -> auto& { return c.train.augment.shift_limit; });
  add_bool("train.loss.bce", [](RunConfig& c) -> auto& { return c.train.loss_terms.bce; });
  add_bool("train.loss.dice", [](RunConfig& c) -> auto& { return c.train.loss_terms.dice; });
  add_bool("train.loss.ssim", [](RunConfig& c) -> auto& { return c.train.loss_terms.ssim; });
  add_bool("train.loss.boundary", [](RunConfig& c) -> auto& { return c.train.loss_terms.boundary; });

  // distill.*
  add_enum(
      "distill.strategy", [](const RunConfig& c) { return strategy_name(c.train.distill.strategy); },
      [](RunConfig& c, const std::string& s) { c.train.distill.strategy = parse_strategy(s); });
  add_double("distill.temperature", [](RunConfig& c) -> auto& { return c.train.distill.temperature; });
  add_double("distill.epsilon", [](RunConfig& c) -> auto& { return c.train.distill.epsilon; });
  add_enum(
      "distill.family",
      [](const RunConfig& c) {
        return c.train.distill.family == KlFamily::Bernoulli ? "bernoulli" : "softmax2";
      },
      [](RunConfig& c, const std::string& s) {
        if (s == "bernoulli") c.train.distill.family = KlFamily::Bernoulli;
        else if (s == "softmax2") c.train.distill.family = KlFamily::Softmax2;
        else throw ConfigError("config key 'distill.family' expects bernoulli or softmax2");
      });
  add_enum(
      "distill.image_norm",
      [](const RunConfig& c) {
        return c.train.distill.image_norm == ImageNorm::Masked ? "masked" : "per_image";
      },
      [](RunConfig& c, const std::string& s) {
        if (s == "masked") c.train.distill.image_norm = ImageNorm::Masked;
        else if (s == "per_image") c.train.distill.image_norm = ImageNorm::PerImage;
        else throw ConfigError("config key 'distill.image_norm' expects masked or per_image");
      });

  // eval.*
  add_enum(
      "eval.pooling", [](const RunConfig& c) { return pooling_name(c.eval.pooling); },
      [](RunConfig& c, const std::string& s) { c.eval.pooling = parse_pooling(s); });
  f["eval.strata_key"] = {[](const RunConfig& c) { return json(c.eval.strata_key); },
                          [](RunConfig& c, const json& v) {
                            c.eval.strata_key = as_string("eval.strata_key", v);
                          }};
  add_int("eval.batch_size", [](RunConfig& c) -> auto& { return c.eval.batch_size; });

  // ablate.*
  f["ablate.seeds"] = {[](const RunConfig& c) { return json(c.ablate.seeds); },
                       [](RunConfig& c, const json& v) {
                         const std::string key = "ablate.seeds";
                         if (!v.is_array() || v.empty()) bad_type(key, "a non-empty array of seeds");
                         c.ablate.seeds.clear();
                         for (const auto& s : v) c.ablate.seeds.push_back(as_u64(key, s));
                       }};

  f["profile"] = {[](const RunConfig& c) { return json(c.profile); },
                  [](RunConfig& c, const json& v) { c.profile = as_string("profile", v); }};
  return f;
}

const std::map<std::string, Field>& fields() {
  static const auto f = build_fields();
  return f;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : fields()) out.push_back(k);
  return out;
}

json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [k, f] : fields()) j[k] = f.get(*this);
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
  const auto& f = fields();
  for (const auto& [k, _] : j.items())
    if (!f.count(k)) throw ConfigError("unknown config key '" + k + "'");
  RunConfig c;
  if (j.contains("profile")) {
    f.at("profile").set(c, j.at("profile"));
    if (c.profile == "paper") c.train.epochs = 100;
    else if (c.profile != "desk")
      throw ConfigError("config key 'profile' expects desk or paper");
  }
  for (const auto& [k, v] : j.items())
    if (k != "profile") f.at(k).set(c, v);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  data.validate();
  train.validate();
  eval.validate();
  if (ablate.seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace c2f
