// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#include "umod/checkpoint.hpp"

#include "umod/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace umod {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little endian");

namespace {

constexpr char kMagic[8] = {'U', 'M', 'O', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorKind::Data, "checkpoint truncated");
  return v;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_matrix(std::istream& is, Matrix& m) {
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!is) fail(ErrorKind::Data, "checkpoint truncated while reading tensors");
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& checkpoint) {
  const auto params = checkpoint.params.parameters();
  nlohmann::json header;
  header["config"] = model::to_json(checkpoint.params.config);
  header["state"] = checkpoint.state;
  nlohmann::json table = nlohmann::json::array();
  for (const Parameter* p : params)
    table.push_back({{"name", p->name},
                     {"rows", p->value.rows()},
                     {"cols", p->value.cols()},
                     {"trainable", p->trainable},
                     {"decay", p->decay}});
  header["parameters"] = table;
  header["optimizer"] = checkpoint.optimizer.has_value();
  if (checkpoint.optimizer) {
    const OptimizerState& o = *checkpoint.optimizer;
    if (o.first_moment.size() != params.size() || o.second_moment.size() != params.size())
      fail(ErrorKind::Data, "optimizer state does not match the parameter list");
    header["optimizer_step"] = o.step;
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Io, "cannot write checkpoint " + path.string());
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Parameter* p : params) write_matrix(os, p->value);
    if (checkpoint.optimizer) {
      for (const Matrix& m : checkpoint.optimizer->first_moment) write_matrix(os, m);
      for (const Matrix& m : checkpoint.optimizer->second_moment) write_matrix(os, m);
    }
    if (!os) fail(ErrorKind::Io, "write failed for checkpoint " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(ErrorKind::Data, path.string() + " is not a umod checkpoint");
  if (read_pod<std::uint32_t>(is) != kVersion)
    fail(ErrorKind::Data, "unsupported checkpoint version in " + path.string());
  const auto len = read_pod<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) fail(ErrorKind::Data, "checkpoint header truncated");

  Checkpoint out;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    model::ModelConfig config = model::model_config_from_json(header.at("config"));
    out.params = model::init_params(config, 0);
    out.state = header.at("state");
    const auto& table = header.at("parameters");
    auto params = out.params.parameters();
    if (table.size() != params.size()) fail(ErrorKind::Data, "checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& e = table[i];
      Parameter& p = *params[i];
      if (e.at("name").get<std::string>() != p.name ||
          e.at("rows").get<Index>() != p.value.rows() || e.at("cols").get<Index>() != p.value.cols())
        fail(ErrorKind::Data, "checkpoint tensor '" + e.at("name").get<std::string>() +
                                  "' does not match the model layout");
      p.trainable = e.at("trainable").get<bool>();
      p.decay = e.at("decay").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, "malformed checkpoint header: " + std::string(e.what()));
  }

  auto params = out.params.parameters();
  for (Parameter* p : params) {
    read_matrix(is, p->value);
    p->zero_grad();
  }
  if (header.value("optimizer", false)) {
    OptimizerState o;
    o.step = header.at("optimizer_step").get<std::int64_t>();
    for (auto* moments : {&o.first_moment, &o.second_moment})
      for (const Parameter* p : params) {
        Matrix m(p->value.rows(), p->value.cols());
        read_matrix(is, m);
        moments->push_back(std::move(m));
      }
    out.optimizer = std::move(o);
  }
  return out;
}

}  // namespace umod
