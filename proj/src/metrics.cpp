#include "subsplit/metrics.hpp"

#include <cmath>
#include <map>
#include <algorithm>

#include "subsplit/error.hpp"

namespace subsplit {

namespace {

struct Cell {
  std::size_t row;
  std::size_t col;
  double count;
};

struct Contingency {
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  std::vector<Cell> cells;  // nonzero cells only
  double n = 0.0;
};

Contingency contingency(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::InvalidData, "labelings differ in length");
  }
  std::map<std::int32_t, std::size_t> ra;
  std::map<std::int32_t, std::size_t> rb;
  for (auto v : a) {
    ra.emplace(v, ra.size());
  }
  for (auto v : b) {
    rb.emplace(v, rb.size());
  }
  Contingency t;
  t.n = static_cast<double>(a.size());
  t.row_sums.assign(ra.size(), 0.0);
  t.col_sums.assign(rb.size(), 0.0);
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t r = ra[a[i]];
    const std::size_t c = rb[b[i]];
    t.row_sums[r] += 1.0;
    t.col_sums[c] += 1.0;
    cells[{r, c}] += 1.0;
  }
  for (const auto& [key, v] : cells) {
    t.cells.push_back({key.first, key.second, v});
  }
  return t;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      h -= (c / n) * std::log(c / n);
    }
  }
  return h;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

double nmi(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.empty()) {
    throw Error(Errc::InvalidData, "NMI needs at least one point");
  }
  const Contingency t = contingency(a, b);
  if (t.row_sums.size() == 1 || t.col_sums.size() == 1) {
    return t.row_sums.size() == t.col_sums.size() ? 1.0 : 0.0;
  }
  double mi = 0.0;
  for (const Cell& c : t.cells) {
    mi += (c.count / t.n) * std::log(c.count * t.n / (t.row_sums[c.row] * t.col_sums[c.col]));
  }
  const double ha = entropy(t.row_sums, t.n);
  const double hb = entropy(t.col_sums, t.n);
  const double denom = 0.5 * (ha + hb);
  const double v = denom > 0.0 ? mi / denom : 1.0;
  return std::clamp(v, 0.0, 1.0);
}

double ari(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::InvalidData, "labelings differ in length");
  }
  if (a.size() < 2) {
    throw Error(Errc::InvalidData, "ARI needs at least two points");
  }
  const Contingency t = contingency(a, b);
  double index = 0.0;
  for (const Cell& c : t.cells) {
    index += choose2(c.count);
  }
  double sum_a = 0.0;
  for (double c : t.row_sums) {
    sum_a += choose2(c);
  }
  double sum_b = 0.0;
  for (double c : t.col_sums) {
    sum_b += choose2(c);
  }
  const double expected = sum_a * sum_b / choose2(t.n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    // both trivial partitions of the same kind
    return 1.0;
  }
  return (index - expected) / (max_index - expected);
}

double best_swap_accuracy(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw Error(Errc::InvalidData, "partition lengths differ or are empty");
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    agree += (truth[i] != 0) == (predicted[i] != 0) ? 1 : 0;
  }
  const double acc = static_cast<double>(agree) / static_cast<double>(truth.size());
  return std::max(acc, 1.0 - acc);
}

double log_posterior(const ModelState& state) {
  const double alpha = state.alpha;
  double lp = static_cast<double>(state.num_clusters()) * std::log(alpha);
  Index n = 0;
  for (const Cluster& c : state.clusters) {
    lp += std::lgamma(static_cast<double>(c.stats.m)) + log_marginal_likelihood(state.prior, c.stats);
    n += c.stats.m;
  }
  return lp + std::lgamma(alpha) - std::lgamma(alpha + static_cast<double>(n));
}

}  // namespace subsplit
