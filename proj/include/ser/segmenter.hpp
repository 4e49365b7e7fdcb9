#pragma once

#include <map>
#include <string>
#include <vector>

#include "ser/dsp/features.hpp"

namespace ser::seg {

struct ChopConfig {
  double window_s = 3.0;
  double overlap_s = 1.0;
  double frame_hop_s = 0.010;

  int window_frames() const;
  int hop_frames() const;
  void validate() const;
};

// Labels carried from the parent segment onto each sub-segment.
struct SegmentLabels {
  std::string segment_id;
  std::string speaker_id;
  int emotion = -1;
  int gender = -1;
};

// Fixed-length slice of a FeatureMatrix. Rows at or after valid_frames are zero.
struct SubSegment {
  dsp::FeatureValues values;
  int valid_frames = 0;
  int offset_frames = 0;  // first source frame covered
  SegmentLabels labels;
};

// 1 if frames <= window, otherwise ceil((frames - window) / hop) + 1.
int subsegment_count(int frames, const ChopConfig& cfg);

// Slices features into overlapping windows; the last one is zero-padded.
std::vector<SubSegment> chop(const dsp::FeatureMatrix& features, const ChopConfig& cfg,
                             const SegmentLabels& labels = {});

struct ClassTally {
  int segments = 0;
  int subsegments = 0;
};

struct LabeledDuration {
  std::string label;
  double duration_s = 0.0;
};

// Frame count a segment of the given duration yields under the default STFT.
int frames_for_duration(double duration_s, int sample_rate_hz = 16000, const dsp::StftConfig& stft = {});

// Per-class segment / sub-segment tallies for segments of the given durations.
std::map<std::string, ClassTally> count_subsegments(const std::vector<LabeledDuration>& segments,
                                                    const ChopConfig& cfg, int sample_rate_hz = 16000);

}  // namespace ser::seg
