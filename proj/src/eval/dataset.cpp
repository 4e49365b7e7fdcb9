#include "ser/eval/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "ser/dsp/wav.hpp"
#include "ser/train/fit.hpp"

namespace ser::eval {

dsp::FeatureMatrix featurize_cached(const corpus::CorpusManifest& manifest, const corpus::UtteranceRecord& rec,
                                    const dsp::FeatureConfig& cfg, const std::optional<std::filesystem::path>& cache_dir,
                                    int* sample_rate_hz, bool* was_cached) {
  const auto audio = manifest.resolve_audio(rec);
  if (was_cached) *was_cached = false;
  std::filesystem::path entry;
  if (cache_dir) {
    entry = *cache_dir / (rec.id + ".serf");
    std::error_code ec;
    if (std::filesystem::exists(entry, ec) &&
        std::filesystem::last_write_time(entry, ec) >= std::filesystem::last_write_time(audio, ec) && !ec) {
      try {
        auto fm = dsp::read_feature_cache(entry);
        if (fm.dims() == cfg.dims()) {
          if (sample_rate_hz) *sample_rate_hz = 0;
          if (was_cached) *was_cached = true;
          return fm;
        }
      } catch (const DataError&) {
        // stale or damaged entry; recompute below
      }
    }
  }
  const auto signal = dsp::load_wav(audio);
  if (sample_rate_hz) *sample_rate_hz = signal.sample_rate_hz;
  auto fm = dsp::featurize(signal, cfg);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    dsp::write_feature_cache(entry, fm);
  }
  return fm;
}

LabeledCorpus load_labeled_corpus(const corpus::CorpusManifest& manifest, const std::vector<std::string>& classes,
                                  const dsp::FeatureConfig& cfg, const std::optional<std::filesystem::path>& cache_dir,
                                  FeaturizeStats* stats) {
  LabeledCorpus c;
  c.manifest = manifest;
  c.classes = classes;
  for (const auto& r : manifest.records) {
    const auto it = std::find(classes.begin(), classes.end(), r.emotion);
    if (it == classes.end()) throw ConfigError("record '" + r.id + "' has unmapped class '" + r.emotion + "'");
    c.emotion.push_back(static_cast<int>(it - classes.begin()));
    c.gender.push_back(r.gender == corpus::Gender::kMale ? 0 : 1);
    int rate = 0;
    bool cached = false;
    c.features.push_back(featurize_cached(manifest, r, cfg, cache_dir, &rate, &cached));
    if (stats) (cached ? stats->cached : stats->computed) += 1;
    if (rate != 0) {
      if (c.sample_rate_hz != 0 && rate != c.sample_rate_hz) {
        throw DataError("mixed sample rates in one corpus (" + std::to_string(c.sample_rate_hz) + " and " +
                        std::to_string(rate) + ")");
      }
      c.sample_rate_hz = rate;
    }
  }
  return c;
}

dsp::NormStats norm_stats_for(const LabeledCorpus& corpus, std::span<const std::size_t> records) {
  std::vector<const dsp::FeatureMatrix*> ptrs;
  for (auto i : records) ptrs.push_back(&corpus.features.at(i));
  return dsp::compute_norm_stats(ptrs);
}

SegmentSet build_segments(const LabeledCorpus& corpus, std::span<const std::size_t> records,
                          const dsp::NormStats& stats, const seg::ChopConfig& chop,
                          std::span<const int> emotion_override) {
  SegmentSet s;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::size_t i = records[k];
    dsp::FeatureMatrix fm = corpus.features.at(i);
    dsp::normalize_in_place(fm, stats);
    const int emotion = emotion_override.empty() ? corpus.emotion[i] : emotion_override[i];
    seg::SegmentLabels labels{corpus.manifest.records[i].id, corpus.manifest.records[i].speaker_id, emotion,
                              corpus.gender[i]};
    auto subs = seg::chop(fm, chop, labels);
    std::vector<std::size_t> idx;
    for (auto& sub : subs) {
      idx.push_back(s.subs.size());
      s.subs.push_back(std::move(sub));
    }
    s.segment_subs.push_back(std::move(idx));
    s.segment_emotion.push_back(emotion);
    s.segment_gender.push_back(corpus.gender[i]);
    s.segment_record.push_back(i);
  }
  // Pointers are taken once the vector no longer grows.
  for (std::size_t seg = 0; seg < s.segment_subs.size(); ++seg) {
    for (auto j : s.segment_subs[seg]) {
      const auto& sub = s.subs[j];
      s.samples.push_back({&sub.values, sub.valid_frames, sub.labels.emotion, sub.labels.gender, static_cast<int>(seg)});
    }
  }
  return s;
}

std::vector<std::size_t> records_of_speakers(const LabeledCorpus& corpus, const std::vector<std::string>& speakers) {
  const std::set<std::string> wanted(speakers.begin(), speakers.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.manifest.records.size(); ++i) {
    if (wanted.count(corpus.manifest.records[i].speaker_id)) out.push_back(i);
  }
  return out;
}

Posteriors predict(net::Model<float>& model, std::span<const train::Sample> samples, int batch_size) {
  Posteriors p;
  const int e = model.spec().n_emotions;
  p.emotion.resize(static_cast<Eigen::Index>(samples.size()), e);
  if (model.spec().multitask) p.gender.resize(static_cast<Eigen::Index>(samples.size()), 2);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t begin = 0; begin < samples.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(samples.size(), begin + static_cast<std::size_t>(batch_size));
    const auto b = train::make_batch(samples, order, begin, end);
    const auto out = model.forward(b.x, b.valid, {});
    p.emotion.middleRows(static_cast<Eigen::Index>(begin), out.emotion.rows()) = net::softmax<float>(out.emotion);
    if (model.spec().multitask) {
      p.gender.middleRows(static_cast<Eigen::Index>(begin), out.gender.rows()) = net::softmax<float>(out.gender);
    }
  }
  return p;
}

}  // namespace ser::eval
