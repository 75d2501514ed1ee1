// Copyright 2026 The lmp Authors
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

#include "lmp/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lmp::nn {

namespace {

constexpr char kMagic[8] = {'L', 'M', 'P', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void put(std::ostream& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw DataError("checkpoint truncated");
  U v = 0;
  for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor<float>& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.size(); ++i)
    put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(t.data()[i]));
}

std::pair<std::string, Tensor<float>> get_tensor(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > 4096) throw DataError("checkpoint tensor name too long");
  std::string name(len, '\0');
  if (!in.read(name.data(), len)) throw DataError("checkpoint truncated");
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28))
    throw DataError("checkpoint tensor '" + name + "' too large");
  Tensor<float> t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data()[i] = std::bit_cast<float>(get<std::uint32_t>(in));
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  check_params(c.model, c.params);
  nlohmann::json header = {{"model", to_json(c.model)},
                           {"hyper", c.hyper},
                           {"seed", c.seed},
                           {"step", c.optimizer.step},
                           {"skipped", c.optimizer.skipped},
                           {"tensors", c.params.size()},
                           {"moments", c.optimizer.m.size()}};
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : c.params) put_tensor(out, name, t);
  for (const auto& [name, t] : c.optimizer.m) put_tensor(out, name, t);
  for (const auto& [name, t] : c.optimizer.v) put_tensor(out, name, t);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw DataError(path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(in);
  if (len > (1ull << 24)) throw DataError("checkpoint header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw DataError("checkpoint truncated");

  Checkpoint c;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    c.model = model_config_from_json(header.at("model"));
    c.hyper = header.at("hyper");
    c.seed = header.at("seed").get<std::uint64_t>();
    c.optimizer.step = header.at("step").get<long>();
    c.optimizer.skipped = header.at("skipped").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  const auto tensors = header.at("tensors").get<size_t>();
  const auto moments = header.at("moments").get<size_t>();
  for (size_t i = 0; i < tensors; ++i) c.params.insert(get_tensor(in));
  for (size_t i = 0; i < moments; ++i) c.optimizer.m.insert(get_tensor(in));
  for (size_t i = 0; i < moments; ++i) c.optimizer.v.insert(get_tensor(in));
  try {
    check_params(c.model, c.params);
  } catch (const ParameterError& e) {
    throw DataError(std::string("checkpoint does not match its model: ") + e.what());
  }
  return c;
}

}  // namespace lmp::nn
