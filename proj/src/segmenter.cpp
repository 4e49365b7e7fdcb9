#include "ser/segmenter.hpp"

#include <cmath>

namespace ser::seg {

int ChopConfig::window_frames() const { return static_cast<int>(std::lround(window_s / frame_hop_s)); }

int ChopConfig::hop_frames() const { return static_cast<int>(std::lround((window_s - overlap_s) / frame_hop_s)); }

void ChopConfig::validate() const {
  if (!(frame_hop_s > 0.0)) throw ConfigError("frame hop must be positive");
  if (!(overlap_s >= 0.0) || !(overlap_s < window_s)) throw ConfigError("chop requires 0 <= overlap < window");
  if (window_frames() < 1 || hop_frames() < 1) throw ConfigError("chop window and hop must span at least one frame");
}

int subsegment_count(int frames, const ChopConfig& cfg) {
  const int w = cfg.window_frames();
  const int h = cfg.hop_frames();
  if (frames <= w) return 1;
  return (frames - w + h - 1) / h + 1;
}

std::vector<SubSegment> chop(const dsp::FeatureMatrix& features, const ChopConfig& cfg, const SegmentLabels& labels) {
  cfg.validate();
  const int frames = features.frames();
  if (frames < 1 || features.dims() < 1) throw ShapeError("cannot chop an empty feature matrix");
  const int w = cfg.window_frames();
  const int h = cfg.hop_frames();
  const int n = subsegment_count(frames, cfg);

  std::vector<SubSegment> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    SubSegment sub;
    sub.offset_frames = i * h;
    sub.valid_frames = std::min(w, frames - sub.offset_frames);
    sub.values = dsp::FeatureValues::Zero(w, features.dims());
    sub.values.topRows(sub.valid_frames) = features.values.middleRows(sub.offset_frames, sub.valid_frames);
    sub.labels = labels;
    out.push_back(std::move(sub));
  }
  return out;
}

int frames_for_duration(double duration_s, int sample_rate_hz, const dsp::StftConfig& stft) {
  const long samples = std::lround(duration_s * sample_rate_hz);
  return dsp::frame_count(samples, stft.window_samples(sample_rate_hz), stft.hop_samples(sample_rate_hz));
}

std::map<std::string, ClassTally> count_subsegments(const std::vector<LabeledDuration>& segments,
                                                    const ChopConfig& cfg, int sample_rate_hz) {
  cfg.validate();
  std::map<std::string, ClassTally> tallies;
  for (const auto& seg : segments) {
    if (!(seg.duration_s > 0.0)) throw DataError("segment duration must be positive");
    const int frames = std::max(1, frames_for_duration(seg.duration_s, sample_rate_hz));
    auto& t = tallies[seg.label];
    t.segments += 1;
    t.subsegments += subsegment_count(frames, cfg);
  }
  return tallies;
}

}  // namespace ser::seg
