// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "histcolor/text.hpp"

namespace histcolor {

namespace {

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  const int v = text::parse_int(s, where);
  require(v >= 0, ErrorCode::kConfig, where + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

#define HC_INT(key, member)                                                                 \
  {key,                                                                                     \
   {[](RunConfig& c, const std::string& v, const std::string& w) { c.member = text::parse_int(v, w); }, \
    [](const RunConfig& c) { return std::to_string(c.member); }}}
#define HC_DOUBLE(key, member)                                                              \
  {key,                                                                                     \
   {[](RunConfig& c, const std::string& v, const std::string& w) { c.member = text::parse_double(v, w); }, \
    [](const RunConfig& c) { return fmt_double(c.member); }}}
#define HC_BOOL(key, member)                                                                \
  {key,                                                                                     \
   {[](RunConfig& c, const std::string& v, const std::string& w) { c.member = text::parse_bool(v, w); }, \
    [](const RunConfig& c) { return fmt_bool(c.member); }}}
#define HC_PATH(key, member)                                                                \
  {key,                                                                                     \
   {[](RunConfig& c, const std::string& v, const std::string&) { c.member = text::trim(v); }, \
    [](const RunConfig& c) { return c.member.string(); }}}
#define HC_U64(key, member)                                                                 \
  {key,                                                                                     \
   {[](RunConfig& c, const std::string& v, const std::string& w) { c.member = parse_u64(v, w); }, \
    [](const RunConfig& c) { return std::to_string(c.member); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table{
      HC_INT("channels", network.channels),
      HC_INT("tau", network.tau),
      HC_INT("heads", network.heads),
      HC_INT("spatial_windows", network.spatial_windows),
      HC_INT("temporal_windows", network.temporal_windows),
      HC_INT("hist_cells", network.hist.cells),
      HC_INT("hist_l_bins", network.hist.l_bins),
      HC_INT("hist_a_bins", network.hist.a_bins),
      HC_INT("hist_b_bins", network.hist.b_bins),
      HC_INT("drconv_regions", network.drconv_regions),
      HC_INT("drconv_kernel", network.drconv_kernel),
      HC_BOOL("use_histogram", network.use_histogram),
      HC_BOOL("use_flow", network.use_flow),
      HC_BOOL("use_spatial_attn", network.use_spatial_attn),
      HC_BOOL("use_temporal_attn", network.use_temporal_attn),
      {"connection",
       {[](RunConfig& c, const std::string& v, const std::string&) {
          c.network.connection = parse_connection_schema(text::trim(v));
        },
        [](const RunConfig& c) { return connection_schema_name(c.network.connection); }}},
      HC_INT("height", network.height),
      HC_INT("width", network.width),
      HC_DOUBLE("lambda1", loss.lambda1),
      HC_DOUBLE("lambda2", loss.lambda2),
      HC_DOUBLE("alpha", loss.alpha),
      HC_DOUBLE("epsilon", loss.epsilon),
      {"d_set",
       {[](RunConfig& c, const std::string& v, const std::string& w) {
          c.loss.d_set.clear();
          for (const auto& part : text::split(v, ',')) c.loss.d_set.push_back(text::parse_int(part, w));
        },
        [](const RunConfig& c) {
          std::vector<std::string> parts;
          for (int d : c.loss.d_set) parts.push_back(std::to_string(d));
          return join(parts);
        }}},
      HC_DOUBLE("lr", optimizer.learning_rate),
      HC_DOUBLE("beta1", optimizer.beta1),
      HC_DOUBLE("beta2", optimizer.beta2),
      HC_DOUBLE("adam_epsilon", optimizer.epsilon),
      HC_INT("steps", optimizer.steps),
      HC_INT("batch_size", optimizer.batch_size),
      HC_INT("checkpoint_every", optimizer.checkpoint_every),
      HC_INT("synthetic_videos", synthetic.videos),
      HC_INT("synthetic_frames", synthetic.frames),
      HC_INT("synthetic_shapes", synthetic.shapes),
      HC_U64("synthetic_seed", synthetic.seed),
      HC_PATH("train_manifest", train_manifest),
      HC_PATH("flow_dir", flow_dir),
      HC_PATH("out", out_dir),
      HC_U64("seed", seed),
      HC_DOUBLE("theta", theta),
      {"without",
       {[](RunConfig& c, const std::string& v, const std::string&) {
          c.without.clear();
          for (const auto& part : text::split(v, ','))
            if (!part.empty()) c.without.push_back(part);
        },
        [](const RunConfig& c) { return join(c.without); }}},
  };
  return table;
}

#undef HC_INT
#undef HC_DOUBLE
#undef HC_BOOL
#undef HC_PATH
#undef HC_U64

}  // namespace

NetworkConfig RunConfig::effective_network() const {
  NetworkConfig n = network;
  for (const auto& flag : without) n = ablate(n, flag);
  return n;
}

void RunConfig::validate() const {
  effective_network().validate();
  loss.validate(network.frames());
  require(optimizer.learning_rate >= 0, ErrorCode::kConfig, "lr must be >= 0");
  require(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 && optimizer.beta2 < 1,
          ErrorCode::kConfig, "Adam betas must lie in [0, 1)");
  require(optimizer.epsilon > 0, ErrorCode::kConfig, "adam_epsilon must be > 0");
  require(optimizer.steps >= 0, ErrorCode::kConfig, "steps must be >= 0");
  require(optimizer.batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
  require(optimizer.checkpoint_every >= 0, ErrorCode::kConfig, "checkpoint_every must be >= 0");
  require(synthetic.videos >= 1 && synthetic.shapes >= 0, ErrorCode::kConfig,
          "synthetic_videos must be >= 1 and synthetic_shapes >= 0");
  require(synthetic.frames >= network.frames(), ErrorCode::kConfig,
          "synthetic_frames must be at least 2*tau+1 = " + std::to_string(network.frames()));
  require(theta > 0, ErrorCode::kConfig, "theta must be > 0");
}

RunConfig parse_run_config(const std::string& content, const std::string& origin) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const auto& [k, f] : fields()) m[k] = &f;
    return m;
  }();
  RunConfig c;
  for (const auto& [key, value] : text::parse_key_values(content, origin)) {
    auto it = index.find(key);
    if (it == index.end()) {
      std::string known;
      for (const auto& [k, f] : fields()) known += (known.empty() ? "" : ", ") + k;
      fail(ErrorCode::kConfig, origin + ": unknown key '" + key + "' (known: " + known + ")");
    }
    it->second->set(c, value, origin + ": " + key);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kUsage, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const RunConfig& config) {
  const std::string t = format_run_config(config);
  return hex64(fnv1a64(t.data(), t.size()));
}

}  // namespace histcolor
