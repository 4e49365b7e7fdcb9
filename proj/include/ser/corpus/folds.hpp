#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ser/corpus/manifest.hpp"

namespace ser::corpus {

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_speakers;  // each list sorted
  std::vector<std::string> val_speakers;
  std::vector<std::string> test_speakers;
};

// Speaker-independent k-fold split. Speakers are shuffled with `seed` and
// dealt into k groups of near-equal size. Fold i tests on group i and
// validates on half (rounded down, at least one) of group i+1 mod k; all
// remaining speakers train. Every speaker is tested exactly once.
// Requires at least two speakers per group.
std::vector<FoldSplit> speaker_kfold(const std::vector<std::string>& speakers, int k, std::uint64_t seed);
std::vector<FoldSplit> speaker_kfold(const CorpusManifest& manifest, int k, std::uint64_t seed);

// Throws DataError when any two roles share a speaker.
void check_disjoint(const FoldSplit& fold);

}  // namespace ser::corpus
