#include "ser/corpus/folds.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace ser::corpus {

std::vector<FoldSplit> speaker_kfold(const std::vector<std::string>& speakers_in, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  std::vector<std::string> speakers(speakers_in);
  std::sort(speakers.begin(), speakers.end());
  speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
  const int n = static_cast<int>(speakers.size());
  if (n < 2 * k) {
    throw DataError("speaker k-fold with k=" + std::to_string(k) + " needs at least " + std::to_string(2 * k) +
                    " speakers, got " + std::to_string(n));
  }

  std::mt19937_64 rng(seed);
  std::shuffle(speakers.begin(), speakers.end(), rng);

  std::vector<std::vector<std::string>> groups(k);
  int pos = 0;
  for (int g = 0; g < k; ++g) {
    const int size = n / k + (g < n % k ? 1 : 0);
    groups[g].assign(speakers.begin() + pos, speakers.begin() + pos + size);
    pos += size;
  }

  std::vector<FoldSplit> folds;
  for (int i = 0; i < k; ++i) {
    FoldSplit f;
    f.fold_index = i;
    f.test_speakers = groups[i];
    const auto& next = groups[(i + 1) % k];
    const int n_val = std::max<int>(1, static_cast<int>(next.size()) / 2);
    f.val_speakers.assign(next.begin(), next.begin() + n_val);
    std::set<std::string> held(f.test_speakers.begin(), f.test_speakers.end());
    held.insert(f.val_speakers.begin(), f.val_speakers.end());
    for (const auto& s : speakers) {
      if (!held.count(s)) f.train_speakers.push_back(s);
    }
    std::sort(f.train_speakers.begin(), f.train_speakers.end());
    std::sort(f.val_speakers.begin(), f.val_speakers.end());
    std::sort(f.test_speakers.begin(), f.test_speakers.end());
    check_disjoint(f);
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<FoldSplit> speaker_kfold(const CorpusManifest& manifest, int k, std::uint64_t seed) {
  return speaker_kfold(manifest.speakers(), k, seed);
}

void check_disjoint(const FoldSplit& fold) {
  std::set<std::string> seen;
  auto add = [&](const std::vector<std::string>& group, const char* role) {
    for (const auto& s : group) {
      if (!seen.insert(s).second) {
        throw DataError("fold " + std::to_string(fold.fold_index) + ": speaker '" + s + "' appears in " + role +
                        " and another role");
      }
    }
  };
  add(fold.train_speakers, "train");
  add(fold.val_speakers, "val");
  add(fold.test_speakers, "test");
}

}  // namespace ser::corpus
