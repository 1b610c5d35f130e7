#pragma once

#include <vector>

#include "harvest/harness.hpp"

namespace harvest {

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

struct EpisodePair {
  int length = 0;
  double reward = 0.0;
};

struct HistogramData {
  std::vector<EpisodePair> pairs;
  std::vector<HistogramBin> length_bins;
  std::vector<HistogramBin> reward_bins;
};

/// Per-episode (length, reward) pairs plus bin counts. Length bins have width
/// `length_width` over [0, horizon] with the last bin closed on the right;
/// rewards use `reward_bins` equal bins over the observed range. Throws
/// std::invalid_argument for an empty summary.
HistogramData emit_histogram_data(const EvalSummary& summary, int length_width = 10, int reward_bins = 20);

}  // namespace harvest
