// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/report.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histcolor/metrics.hpp"
#include "histcolor/plot.hpp"

namespace histcolor {

namespace {

using nlohmann::json;

json means_json(const MetricMeans& m) {
  return {{"psnr", m.psnr}, {"ssim", m.ssim}, {"warp_error", m.warp_error}, {"l2_error", m.l2_error}};
}

MetricMeans means_from(const json& j) {
  MetricMeans m;
  m.psnr = j.at("psnr").get<double>();
  m.ssim = j.at("ssim").get<double>();
  m.warp_error = j.at("warp_error").get<double>();
  m.l2_error = j.at("l2_error").get<double>();
  return m;
}

Tensor<float> to_255(const Tensor<float>& rgb) {
  Tensor<float> out = rgb;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= 255.0f;
  return out;
}

}  // namespace

void MetricsReport::finalize() {
  aggregate = {};
  for (auto& v : videos) {
    v.mean = {};
    v.mean.warp_error = v.warp_error;
    for (const auto& f : v.frames) {
      v.mean.psnr += f.psnr;
      v.mean.ssim += f.ssim;
      v.mean.l2_error += f.l2_error;
    }
    if (!v.frames.empty()) {
      const double n = static_cast<double>(v.frames.size());
      v.mean.psnr /= n;
      v.mean.ssim /= n;
      v.mean.l2_error /= n;
    }
    aggregate.psnr += v.mean.psnr;
    aggregate.ssim += v.mean.ssim;
    aggregate.warp_error += v.mean.warp_error;
    aggregate.l2_error += v.mean.l2_error;
  }
  if (!videos.empty()) {
    const double n = static_cast<double>(videos.size());
    aggregate.psnr /= n;
    aggregate.ssim /= n;
    aggregate.warp_error /= n;
    aggregate.l2_error /= n;
  }
}

std::string MetricsReport::to_json() const {
  json doc;
  doc["schema"] = kReportSchema;
  doc["dataset"] = dataset;
  doc["config_hash"] = config_hash;
  doc["videos"] = json::array();
  for (const auto& v : videos) {
    json jv;
    jv["name"] = v.name;
    jv["warp_error"] = v.warp_error;
    jv["frames"] = json::array();
    for (const auto& f : v.frames)
      jv["frames"].push_back({{"index", f.index}, {"psnr", f.psnr}, {"ssim", f.ssim}, {"l2_error", f.l2_error}});
    jv["mean"] = means_json(v.mean);
    doc["videos"].push_back(std::move(jv));
  }
  doc["aggregate"] = means_json(aggregate);
  return doc.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    require(doc.at("schema").get<std::string>() == kReportSchema, ErrorCode::kFormat,
            "report: unsupported schema");
    MetricsReport r;
    r.dataset = doc.at("dataset").get<std::string>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& jv : doc.at("videos")) {
      VideoMetrics v;
      v.name = jv.at("name").get<std::string>();
      v.warp_error = jv.at("warp_error").get<double>();
      for (const auto& jf : jv.at("frames"))
        v.frames.push_back({jf.at("index").get<int>(), jf.at("psnr").get<double>(),
                            jf.at("ssim").get<double>(), jf.at("l2_error").get<double>()});
      v.mean = means_from(jv.at("mean"));
      r.videos.push_back(std::move(v));
    }
    r.aggregate = means_from(doc.at("aggregate"));
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("report: ") + e.what());
  }
}

void MetricsReport::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << to_json();
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

MetricsReport MetricsReport::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

VideoMetrics evaluate_video(const std::string& name, const std::vector<Tensor<float>>& pred,
                            const std::vector<Tensor<float>>& gt,
                            const std::vector<FlowField>& backward,
                            const std::vector<Tensor<float>>& masks) {
  require(pred.size() == gt.size(), ErrorCode::kUsage,
          "video '" + name + "': " + std::to_string(pred.size()) + " predicted vs " +
              std::to_string(gt.size()) + " ground-truth frames");
  require(!pred.empty(), ErrorCode::kUsage, "video '" + name + "' has no frames");
  VideoMetrics v;
  v.name = name;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Tensor<float> a = to_255(pred[t]), b = to_255(gt[t]);
    v.frames.push_back({static_cast<int>(t), psnr(a, b), ssim(a, b), l2_error(a, b)});
  }
  if (pred.size() >= 2) v.warp_error = warp_error(pred, backward, masks);
  MetricsReport tmp;
  tmp.videos.push_back(v);
  tmp.finalize();
  return tmp.videos.front();
}

void write_metric_plots(const VideoMetrics& video, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<double> p, s, l;
  for (const auto& f : video.frames) {
    p.push_back(f.psnr);
    s.push_back(f.ssim);
    l.push_back(f.l2_error);
  }
  write_line_plot(dir / (video.name + "_psnr.png"), p);
  write_line_plot(dir / (video.name + "_ssim.png"), s);
  write_line_plot(dir / (video.name + "_l2.png"), l);
}

}  // namespace histcolor
