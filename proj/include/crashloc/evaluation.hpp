#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "crashloc/detail/text.hpp"
#include "crashloc/error.hpp"
#include "crashloc/ranking.hpp"
#include "crashloc/spectra.hpp"

namespace crashloc {

/// Fault id -> names of the entities its fix touched. Ordered by fault id.
using GroundTruth = std::map<std::string, std::vector<std::string>>;

inline GroundTruth read_ground_truth(std::istream& in, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError(source, 0, "ground truth must be a JSON object");
  if (doc.empty()) throw InputError(source, 0, "ground truth names no faults");
  GroundTruth truth;
  for (const auto& [fault, fixes] : doc.items()) {
    if (fault.empty()) throw InputError(source, 0, "empty fault id");
    if (!fixes.is_array() || fixes.empty())
      throw InputError(source, 0, "fault '" + fault + "' needs a non-empty fix list");
    auto& out = truth[fault];
    for (const auto& f : fixes) {
      if (!f.is_string() || f.get_ref<const std::string&>().empty())
        throw InputError(source, 0, "fault '" + fault + "' has a non-string fix location");
      out.push_back(f.get<std::string>());
    }
  }
  return truth;
}

inline void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [fault, fixes] : truth) doc[fault] = fixes;
  out << doc.dump(2) << '\n';
}

/// Rank at which a developer walking the report finds the fault: the first
/// fix-set member with positive suspiciousness, counted pessimistically as the
/// last position of its score tie group. Empty when no fix-set member was
/// implicated by any failing trace.
inline std::optional<std::size_t> fault_rank(const SuspiciousnessReport& report,
                                             std::span<const std::string> fix_set) {
  if (fix_set.empty()) throw std::invalid_argument("fix set is empty");
  if (report.entries.empty()) throw std::invalid_argument("report is empty");
  const std::unordered_set<std::string_view> fixes(fix_set.begin(), fix_set.end());
  const auto& e = report.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!(e[i].final_score > 0) || !fixes.contains(e[i].name)) continue;
    std::size_t end = i;
    while (end + 1 < e.size() && e[end + 1].final_score == e[i].final_score) ++end;
    return end + 1;
  }
  return std::nullopt;
}

struct FaultOutcome {
  std::string fault_id;
  std::optional<std::size_t> rank;
  std::size_t entity_count = 0;  // size of the ranked list the rank refers to
};

inline FaultOutcome evaluate_fault(const SuspiciousnessReport& report, std::string fault_id,
                                   std::span<const std::string> fix_set) {
  return {std::move(fault_id), fault_rank(report, fix_set), report.entries.size()};
}

/// True when the fault is found within the top `percent` of its list. Only
/// whole entities can be examined, so the budget is ceil(percent * n / 100).
inline bool located_within(const FaultOutcome& o, double percent) {
  return o.rank && static_cast<double>(*o.rank - 1) * 100.0 < percent * static_cast<double>(o.entity_count);
}

/// Percentage of faults located by examining the top `percent` of entities.
inline double percent_located(std::span<const FaultOutcome> outcomes, double percent) {
  if (outcomes.empty()) throw std::invalid_argument("no faults to evaluate");
  std::size_t hit = 0;
  for (const auto& o : outcomes) hit += located_within(o, percent) ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(outcomes.size());
}

struct CurvePoint {
  double percent_examined;
  double percent_located;
};

struct EvaluationCurve {
  std::vector<CurvePoint> points;
  std::optional<Metric> metric;
  std::optional<std::uint32_t> depth;
  std::optional<bool> use_h1;
  std::optional<bool> use_h2;
};

/// Cumulative faults located at each whole percentage 1..100 of examined code.
inline EvaluationCurve curve(std::span<const FaultOutcome> outcomes) {
  EvaluationCurve c;
  c.points.reserve(100);
  for (int n = 1; n <= 100; ++n) c.points.push_back({double(n), percent_located(outcomes, n)});
  return c;
}

/// Probability that a random ranking of n entities puts at least one of k fix
/// points within the first m.
inline double dummy_guess_probability(std::uint64_t m, std::uint64_t n, std::uint64_t k = 3) {
  if (m > n) throw std::invalid_argument("examined entities exceed the total");
  if (k < 1 || k > n) throw std::invalid_argument("fix points must be in [1, n]");
  if (n - m < k) return 1.0;  // some factor of the miss product is zero
  // Exact integer products while they fit, so small cases match closed forms bit for bit.
  unsigned __int128 miss = 1, all = 1;
  constexpr auto limit = static_cast<unsigned __int128>(std::numeric_limits<std::uint64_t>::max());
  bool exact = true;
  for (std::uint64_t t = 0; t < k && exact; ++t) {
    miss *= n - m - t;
    all *= n - t;
    exact = all <= limit;
  }
  if (exact) return 1.0 - static_cast<double>(miss) / static_cast<double>(all);
  double ratio = 1.0;
  for (std::uint64_t t = 0; t < k; ++t)
    ratio *= static_cast<double>(n - m - t) / static_cast<double>(n - t);
  return 1.0 - ratio;
}

/// Summed depth-discounted share of the list a developer can skip. Not
/// normalized: with several faults the value may exceed 1.
inline double precision(std::span<const FaultOutcome> outcomes, std::uint32_t depth,
                        std::uint32_t d_max) {
  if (d_max == 0) throw std::invalid_argument("d_max must be positive");
  if (depth > d_max) throw std::invalid_argument("depth exceeds d_max");
  const double weight = 1.0 - static_cast<double>(depth) / static_cast<double>(d_max);
  double sum = 0;
  for (const auto& o : outcomes) {
    if (!o.rank) continue;
    const double viewed = static_cast<double>(*o.rank - 1);
    sum += (1.0 - viewed / static_cast<double>(o.entity_count)) * weight;
  }
  return sum;
}

inline double precision(std::span<const std::size_t> ranks, std::size_t list_size,
                        std::uint32_t depth, std::uint32_t d_max) {
  std::vector<FaultOutcome> outcomes;
  for (auto r : ranks) outcomes.push_back({{}, r, list_size});
  return precision(outcomes, depth, d_max);
}

inline double recall(std::size_t covered, std::size_t faults) {
  if (faults == 0) throw std::invalid_argument("no faults");
  if (covered > faults) throw std::invalid_argument("covered exceeds fault count");
  return static_cast<double>(covered) / static_cast<double>(faults);
}

inline double recall(std::span<const FaultOutcome> outcomes) {
  std::size_t covered = 0;
  for (const auto& o : outcomes) covered += o.rank ? 1 : 0;
  return recall(covered, outcomes.size());
}

inline double f_measure(double p, double r) {
  if (p + r <= 0) return 0.0;
  return 2.0 * p * r / (p + r);
}

struct AverageCost {
  double value = 0;
  std::size_t counted = 0;
  std::vector<std::string> excluded;  // faults never implicated
};

/// Mean over located faults of rank / list size.
inline AverageCost average_cost(std::span<const FaultOutcome> outcomes) {
  AverageCost cost;
  double sum = 0;
  for (const auto& o : outcomes) {
    if (!o.rank) {
      cost.excluded.push_back(o.fault_id);
      continue;
    }
    sum += static_cast<double>(*o.rank) / static_cast<double>(o.entity_count);
    ++cost.counted;
  }
  if (cost.counted == 0) throw Error("no fault is located by any report");
  cost.value = sum / static_cast<double>(cost.counted);
  return cost;
}

struct DepthScore {
  std::uint32_t depth = 0;
  double precision = 0;
  double recall = 0;
  double f = 0;
};

/// Depth with the highest F-measure; the smallest such depth on ties.
inline std::uint32_t select_optimal_depth(std::span<const DepthScore> scores) {
  if (scores.empty()) throw std::invalid_argument("empty depth range");
  const DepthScore* best = &scores.front();
  for (const auto& s : scores)
    if (s.f > best->f || (s.f == best->f && s.depth < best->depth)) best = &s;
  return best->depth;
}

struct PairedT {
  double t = 0;
  std::size_t df = 0;
};

/// Paired t statistic on per-fault values (e.g. ranks under two metrics).
inline PairedT paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("need >= 2 paired samples");
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double se = std::sqrt(ss / (n - 1) / n);
  PairedT r{0, a.size() - 1};
  if (se > 0)
    r.t = mean / se;
  else if (mean != 0)
    r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
  return r;
}

namespace detail {

/// k distinct values from [0, n), ascending (Floyd's combination sampling;
/// std::sample needs a materialized population here).
template <typename Rng>
std::vector<std::uint64_t> sample_indices(std::uint64_t n, std::uint64_t k, Rng& rng) {
  std::unordered_set<std::uint64_t> picked;
  picked.reserve(k);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const auto t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    if (!picked.insert(t).second) picked.insert(j);
  }
  std::vector<std::uint64_t> out(picked.begin(), picked.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t floor_fraction(double fraction, std::size_t count) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 1e-9));
}
}  // namespace detail

/// Simulates lower test coverage: picks floor(fraction * k) of the k entities
/// that passing traces cover and erases them from every passing trace.
inline ProgramSpectra degrade_coverage(const ProgramSpectra& spectra, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction >= 0 && fraction <= 1)) throw std::invalid_argument("fraction must be in [0, 1]");
  std::vector<EntityId> covered;
  const auto cols = spectra.entities();
  for (std::size_t c = 0; c < cols.size(); ++c)
    if (spectra.counts()[c].a_ep > 0) covered.push_back(cols[c]);

  std::vector<EntityId> removed;
  std::mt19937_64 rng(seed);
  std::sample(covered.begin(), covered.end(), std::back_inserter(removed),
              detail::floor_fraction(fraction, covered.size()), rng);
  std::sort(removed.begin(), removed.end());

  std::vector<ExecutionTrace> rows(spectra.traces().begin(), spectra.traces().end());
  for (auto& row : rows) {
    if (row.label != TraceLabel::pass) continue;
    std::vector<EntityId> kept;
    std::set_difference(row.hits.begin(), row.hits.end(), removed.begin(), removed.end(),
                        std::back_inserter(kept));
    row.hits = std::move(kept);
  }
  return ProgramSpectra::from_matrix({cols.begin(), cols.end()}, std::move(rows));
}

/// Flips the hit bit of floor(rate * cells) uniformly chosen (trace, entity)
/// cells across all traces. Columns and labels are unchanged.
inline ProgramSpectra inject_noise(const ProgramSpectra& spectra, double rate, std::uint64_t seed) {
  if (!(rate >= 0 && rate <= 1)) throw std::invalid_argument("rate must be in [0, 1]");
  const auto cols = spectra.entities();
  const std::uint64_t width = cols.size();
  const std::uint64_t cells = width * spectra.traces().size();
  const auto flips = detail::floor_fraction(rate, cells);

  std::mt19937_64 rng(seed);
  const auto chosen = detail::sample_indices(cells, flips, rng);

  std::vector<ExecutionTrace> rows(spectra.traces().begin(), spectra.traces().end());
  std::vector<char> dense(width);
  auto next = chosen.begin();
  for (std::uint64_t r = 0; r < rows.size(); ++r) {
    const std::uint64_t row_end = (r + 1) * width;
    if (next == chosen.end() || *next >= row_end) continue;
    auto& row = rows[r];
    std::fill(dense.begin(), dense.end(), 0);
    for (EntityId id : row.hits) dense[*spectra.column_of(id)] = 1;
    for (; next != chosen.end() && *next < row_end; ++next) dense[*next - r * width] ^= 1;
    row.hits.clear();
    for (std::size_t c = 0; c < width; ++c)
      if (dense[c]) row.hits.push_back(cols[c]);
  }
  return ProgramSpectra::from_matrix({cols.begin(), cols.end()}, std::move(rows));
}

/// Summary grid: percentage of functions examined per output row.
inline constexpr double kSummaryThresholds[] = {1, 3, 5, 10, 25, 50, 75, 90};

inline void write_curve(std::ostream& out, const EvaluationCurve& c) {
  out << "percent_examined\tpercent_located\n";
  for (const auto& p : c.points)
    out << detail::fixed6(p.percent_examined) << '\t' << detail::fixed6(p.percent_located) << '\n';
}

}  // namespace crashloc
