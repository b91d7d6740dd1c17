// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "histcolor/config.hpp"
#include "histcolor/text.hpp"

namespace histcolor {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr const char* kFormatTag = "histcolor-checkpoint/1";

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out.empty() ? "scalar" : out;
}

Shape parse_shape(const std::string& token, const std::string& where) {
  Shape s;
  if (token == "scalar") return s;
  for (const auto& part : text::split(token, 'x')) s.push_back(text::parse_int(part, where));
  return s;
}

std::string tensor_hash(const Tensor<float>& t) {
  return hex64(fnv1a64(t.data(), static_cast<std::size_t>(t.numel()) * sizeof(float)));
}

std::map<std::string, std::pair<bool, const Tensor<float>*>> store_tensors(
    const nn::ParameterStore<float>& store) {
  std::map<std::string, std::pair<bool, const Tensor<float>*>> out;
  for (const auto& p : store.parameters()) out[p.name] = {false, &p.var.value()};
  for (const auto& b : store.buffers()) out[b.name] = {true, b.value.get()};
  return out;
}

}  // namespace

std::string CheckpointManifest::to_text() const {
  std::ostringstream out;
  out << "format " << kFormatTag << "\n";
  out << "step " << step << "\n";
  out << "tensors " << entries.size() << "\n";
  for (const auto& e : entries)
    out << (e.buffer ? "buffer " : "param ") << e.name << ' ' << shape_token(e.shape) << ' '
        << e.offset << ' ' << e.count << ' ' << e.hash << "\n";
  out << "config\n" << config;
  if (!config.empty() && config.back() != '\n') out << "\n";
  out << "end\n";
  return out.str();
}

CheckpointManifest CheckpointManifest::parse(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  auto bad = [&](const std::string& what) { fail(ErrorCode::kFormat, origin + ": " + what); };
  CheckpointManifest m;
  if (!std::getline(in, line) || line != std::string("format ") + kFormatTag) bad("missing format line");
  if (!std::getline(in, line) || line.rfind("step ", 0) != 0) bad("missing step line");
  m.step = text::parse_int(line.substr(5), origin + ": step");
  if (!std::getline(in, line) || line.rfind("tensors ", 0) != 0) bad("missing tensor count");
  const int count = text::parse_int(line.substr(8), origin + ": tensors");
  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line)) bad("truncated tensor list");
    std::istringstream ls(line);
    std::string kind, shape;
    CheckpointEntry e;
    if (!(ls >> kind >> e.name >> shape >> e.offset >> e.count >> e.hash) ||
        (kind != "param" && kind != "buffer"))
      bad("malformed tensor line '" + line + "'");
    e.buffer = kind == "buffer";
    e.shape = parse_shape(shape, origin + ": " + e.name);
    if (shape_numel(e.shape) != e.count) bad("count does not match shape for " + e.name);
    m.entries.push_back(std::move(e));
  }
  if (!std::getline(in, line) || line != "config") bad("missing config block");
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    m.config += line + "\n";
  }
  if (!ended) bad("missing end marker");
  return m;
}

CheckpointManifest make_manifest(const nn::ParameterStore<float>& store, int step,
                                 std::string config) {
  CheckpointManifest m;
  m.step = step;
  m.config = std::move(config);
  std::int64_t offset = 0;
  auto push = [&](const std::string& name, bool buffer, const Tensor<float>& t) {
    m.entries.push_back({name, buffer, t.shape(), offset, t.numel(), tensor_hash(t)});
    offset += t.numel();
  };
  for (const auto& p : store.parameters()) push(p.name, false, p.var.value());
  for (const auto& b : store.buffers()) push(b.name, true, *b.value);
  return m;
}

void save_checkpoint(const nn::ParameterStore<float>& store, const std::filesystem::path& dir,
                     int step, const std::string& config) {
  std::filesystem::create_directories(dir);
  const CheckpointManifest m = make_manifest(store, step, config);
  const auto weights_tmp = dir / (std::string(kWeightsFile) + ".tmp");
  const auto manifest_tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(weights_tmp, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + weights_tmp.string());
    for (const auto& p : store.parameters())
      out.write(reinterpret_cast<const char*>(p.var.value().data()),
                static_cast<std::streamsize>(p.var.value().numel() * sizeof(float)));
    for (const auto& b : store.buffers())
      out.write(reinterpret_cast<const char*>(b.value->data()),
                static_cast<std::streamsize>(b.value->numel() * sizeof(float)));
    require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + weights_tmp.string());
  }
  {
    std::ofstream out(manifest_tmp);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + manifest_tmp.string());
    out << m.to_text();
    require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + manifest_tmp.string());
  }
  std::filesystem::rename(weights_tmp, dir / kWeightsFile);
  std::filesystem::rename(manifest_tmp, dir / kManifestFile);
}

CheckpointManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kUsage, "no checkpoint manifest at " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return CheckpointManifest::parse(ss.str(), path.string());
}

std::vector<std::string> manifest_differences(const CheckpointManifest& manifest,
                                              const nn::ParameterStore<float>& store) {
  std::vector<std::string> diffs;
  auto tensors = store_tensors(store);
  for (const auto& e : manifest.entries) {
    auto it = tensors.find(e.name);
    if (it == tensors.end()) {
      diffs.push_back(e.name + " (only in checkpoint)");
      continue;
    }
    if (it->second.second->shape() != e.shape)
      diffs.push_back(e.name + " (checkpoint " + shape_string(e.shape) + ", model " +
                      shape_string(it->second.second->shape()) + ")");
    else if (it->second.first != e.buffer)
      diffs.push_back(e.name + " (parameter/buffer kind differs)");
    tensors.erase(it);
  }
  for (const auto& [name, t] : tensors) diffs.push_back(name + " (only in model)");
  return diffs;
}

CheckpointManifest load_checkpoint(nn::ParameterStore<float>& store, const std::filesystem::path& dir) {
  CheckpointManifest m = read_manifest(dir);
  const auto diffs = manifest_differences(m, store);
  if (!diffs.empty()) {
    std::string msg = "checkpoint " + dir.string() + " does not match the model (" +
                      std::to_string(diffs.size()) + " differing tensors):";
    for (const auto& d : diffs) msg += " " + d + ";";
    fail(ErrorCode::kIncompatible, msg);
  }
  const auto wpath = dir / kWeightsFile;
  std::ifstream in(wpath, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kUsage, "missing " + wpath.string());
  const auto bytes = static_cast<std::int64_t>(std::filesystem::file_size(wpath));
  std::int64_t total = 0;
  for (const auto& e : m.entries) total += e.count;
  require(bytes == total * static_cast<std::int64_t>(sizeof(float)), ErrorCode::kFormat,
          wpath.string() + ": expected " + std::to_string(total * 4) + " bytes, found " +
              std::to_string(bytes));
  std::map<std::string, Tensor<float>*> targets;
  for (auto& p : store.parameters()) targets[p.name] = &p.var.mutable_value();
  for (auto& b : store.buffers()) targets[b.name] = b.value.get();
  for (const auto& e : m.entries) {
    Tensor<float> tmp(e.shape);
    in.seekg(e.offset * static_cast<std::int64_t>(sizeof(float)));
    in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(e.count * sizeof(float)));
    require(static_cast<bool>(in), ErrorCode::kFormat, wpath.string() + ": truncated at " + e.name);
    require(tensor_hash(tmp) == e.hash, ErrorCode::kFormat,
            wpath.string() + ": hash mismatch for " + e.name);
    *targets.at(e.name) = std::move(tmp);
  }
  return m;
}

}  // namespace histcolor
