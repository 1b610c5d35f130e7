#include "harvest/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace harvest {

namespace {

std::size_t bin_index(double v, double lo, double width, std::size_t n) {
  if (width <= 0.0) return 0;
  const double k = std::floor((v - lo) / width);
  if (k < 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), n - 1);
}

}  // namespace

HistogramData emit_histogram_data(const EvalSummary& summary, int length_width, int reward_bins) {
  if (summary.rewards.empty()) throw std::invalid_argument("emit_histogram_data: empty summary");
  if (summary.rewards.size() != summary.lengths.size())
    throw std::invalid_argument("emit_histogram_data: rewards and lengths differ in size");
  if (length_width < 1 || reward_bins < 1) throw std::invalid_argument("emit_histogram_data: bad bin settings");

  HistogramData out;
  for (std::size_t i = 0; i < summary.rewards.size(); ++i) out.pairs.push_back({summary.lengths[i], summary.rewards[i]});

  const int horizon = std::max(summary.horizon, *std::max_element(summary.lengths.begin(), summary.lengths.end()));
  const auto n_len = static_cast<std::size_t>(std::max(1, (horizon + length_width - 1) / length_width));
  for (std::size_t k = 0; k < n_len; ++k)
    out.length_bins.push_back({static_cast<double>(k) * length_width,
                               std::min<double>(static_cast<double>(k + 1) * length_width, horizon), 0});
  for (int len : summary.lengths) ++out.length_bins[bin_index(len, 0.0, length_width, n_len)].count;

  const auto [lo_it, hi_it] = std::minmax_element(summary.rewards.begin(), summary.rewards.end());
  const double lo = *lo_it, hi = *hi_it;
  const auto n_rew = static_cast<std::size_t>(reward_bins);
  const double width = (hi - lo) / reward_bins;
  for (std::size_t k = 0; k < n_rew; ++k)
    out.reward_bins.push_back({lo + width * static_cast<double>(k), k + 1 == n_rew ? hi : lo + width * static_cast<double>(k + 1), 0});
  for (double r : summary.rewards) ++out.reward_bins[bin_index(r, lo, width, n_rew)].count;
  return out;
}

}  // namespace harvest
