#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ser/corpus/manifest.hpp"

namespace ser::corpus {

// Indices of records to keep after thinning the neutral class to about
// `target_fraction` of its size. Non-neutral items are always kept and every
// speaker holding a neutral item keeps at least `per_speaker_min` of them.
// Output indices are ascending.
std::vector<std::size_t> downsample_neutral_indices(std::span<const std::string> speakers,
                                                    const std::vector<bool>& is_neutral, double target_fraction,
                                                    std::uint64_t seed, int per_speaker_min = 1);

std::vector<UtteranceRecord> downsample_neutral(std::span<const UtteranceRecord> records,
                                                const std::string& neutral_label, double target_fraction,
                                                std::uint64_t seed, int per_speaker_min = 1);

// Oversamples minority classes with replacement until every class matches
// the largest one. Returns indices: every original once (in order), then the
// drawn duplicates. Throws when a class in [0, n_classes) has no items.
std::vector<std::size_t> oversample_balance(std::span<const int> labels, int n_classes, std::uint64_t seed);

}  // namespace ser::corpus
