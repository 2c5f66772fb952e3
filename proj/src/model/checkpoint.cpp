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

#include "c2f/checkpoint.hpp"

#include <cstring>

#include "c2f/error.hpp"
#include "c2f/io_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace c2f {

namespace {

constexpr char kMagic[8] = {'C', '2', 'F', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + k])) << (8 * k);
  return v;
}

std::string shape_str(c10::IntArrayRef s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::string_view domain_name(Domain d) { return d == Domain::Coarse ? "coarse" : "fine"; }

Domain parse_domain(std::string_view name) {
  if (name == "coarse") return Domain::Coarse;
  if (name == "fine") return Domain::Fine;
  throw ConfigError("unknown domain '" + std::string(name) + "' (expected coarse or fine)");
}

std::string_view role_name(Role r) { return r == Role::Teacher ? "teacher" : "student"; }

Checkpoint capture(torch::nn::Module& module, const ModelConfig& config, Role role,
                   Domain trained_on, bool frozen) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.role = role;
  ckpt.trained_on = trained_on;
  ckpt.frozen = frozen;
  torch::NoGradGuard guard;
  for (const auto& item : module.named_parameters())
    ckpt.parameters.emplace_back(item.key(),
                                 item.value().detach().to(torch::kFloat32).contiguous().clone());
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, torch::nn::Module& module) {
  auto params = module.named_parameters();
  if (params.size() != ckpt.parameters.size())
    throw ShapeError("checkpoint has " + std::to_string(ckpt.parameters.size()) +
                     " tensors, model expects " + std::to_string(params.size()));
  for (const auto& [name, value] : ckpt.parameters) {
    auto* dst = params.find(name);
    if (!dst) throw ShapeError("checkpoint tensor '" + name + "' does not exist in the model");
    if (!dst->sizes().equals(value.sizes()))
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_str(value.sizes()) +
                       ", model expects " + shape_str(dst->sizes()));
  }
  torch::NoGradGuard guard;
  for (const auto& [name, value] : ckpt.parameters) params[name].copy_(value);
}

SegmentationNet make_teacher(const Checkpoint& ckpt) {
  if (ckpt.role != Role::Teacher)
    throw ConfigError("expected a teacher checkpoint, got a " + std::string(role_name(ckpt.role)));
  SegmentationNet net(ckpt.config);
  apply_checkpoint(ckpt, *net);
  return net;
}

StudentNet make_student(const Checkpoint& ckpt) {
  if (ckpt.role != Role::Student)
    throw ConfigError("expected a student checkpoint, got a " + std::string(role_name(ckpt.role)));
  StudentNet net(ckpt.config);
  apply_checkpoint(ckpt, *net);
  return net;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  json tensors = json::array();
  std::string payload;
  for (const auto& [name, value] : ckpt.parameters) {
    auto t = value.detach().to(torch::kFloat32).contiguous();
    const auto n = static_cast<std::size_t>(t.numel());
    tensors.push_back({{"name", name},
                       {"shape", t.sizes().vec()},
                       {"offset", payload.size()},
                       {"nbytes", n * 4}});
    payload += encode_f32le({t.data_ptr<float>(), n});
  }
  const json header = {{"config", ckpt.config.to_json()},
                       {"role", role_name(ckpt.role)},
                       {"trained_on", domain_name(ckpt.trained_on)},
                       {"frozen", ckpt.frozen},
                       {"info", ckpt.info},
                       {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le(out, kVersion, 4);
  put_le(out, text.size(), 8);
  out += text;
  out += payload;
  write_file(path, out);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string buf = read_file(path);
  const std::size_t prefix = sizeof kMagic + 12;
  if (buf.size() < prefix || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  if (get_le(buf, 8, 4) != kVersion)
    throw IoError("unsupported checkpoint version in " + path.string());
  const std::uint64_t header_len = get_le(buf, 12, 8);
  if (buf.size() < prefix + header_len) throw IoError("truncated checkpoint: " + path.string());

  Checkpoint ckpt;
  json header;
  try {
    header = json::parse(std::string_view(buf).substr(prefix, header_len));
    ckpt.config = ModelConfig::from_json(header.at("config"));
    const auto role = header.at("role").get<std::string>();
    if (role != "teacher" && role != "student")
      throw IoError("unknown checkpoint role '" + role + "'");
    ckpt.role = role == "teacher" ? Role::Teacher : Role::Student;
    ckpt.trained_on = parse_domain(header.at("trained_on").get<std::string>());
    ckpt.frozen = header.at("frozen").get<bool>();
    ckpt.info = header.value("info", json::object());
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }

  const std::string_view payload = std::string_view(buf).substr(prefix + header_len);
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<int64_t>>();
    const auto offset = t.at("offset").get<std::size_t>();
    const auto nbytes = t.at("nbytes").get<std::size_t>();
    std::size_t numel = 1;
    for (auto d : shape) numel *= static_cast<std::size_t>(d);
    if (nbytes != numel * 4 || offset + nbytes > payload.size())
      throw IoError("tensor '" + name + "' is out of bounds in " + path.string());
    auto values = decode_f32le(payload.substr(offset, nbytes));
    auto tensor = torch::from_blob(values.data(), shape, torch::kFloat32).clone();
    ckpt.parameters.emplace_back(name, tensor);
  }

  // Names and shapes must agree with the architecture the header describes.
  if (ckpt.role == Role::Teacher) {
    SegmentationNet probe(ckpt.config);
    apply_checkpoint(ckpt, *probe);
  } else {
    StudentNet probe(ckpt.config);
    apply_checkpoint(ckpt, *probe);
  }
  return ckpt;
}

std::uint64_t parameter_checksum(torch::nn::Module& module) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& item : module.named_parameters()) {
    mix(item.key().data(), item.key().size());
    auto t = item.value().detach().contiguous().cpu();
    const auto sizes = t.sizes().vec();
    mix(sizes.data(), sizes.size() * sizeof(int64_t));
    mix(t.data_ptr(), static_cast<std::size_t>(t.numel()) * t.element_size());
  }
  return h;
}

}  // namespace c2f
