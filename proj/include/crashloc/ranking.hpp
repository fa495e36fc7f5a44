#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "crashloc/callgraph.hpp"
#include "crashloc/detail/parallel.hpp"
#include "crashloc/detail/text.hpp"
#include "crashloc/entity.hpp"
#include "crashloc/error.hpp"
#include "crashloc/spectra.hpp"

namespace crashloc {

enum class Metric { ochiai, tarantula, jaccard };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::ochiai: return "ochiai";
    case Metric::tarantula: return "tarantula";
    case Metric::jaccard: return "jaccard";
  }
  return "?";
}

inline std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "ochiai") return Metric::ochiai;
  if (name == "tarantula") return Metric::tarantula;
  if (name == "jaccard") return Metric::jaccard;
  return std::nullopt;
}

// The formulas take a_ep as a real so that the coverage-adjusted count can be
// substituted directly. An entity no failing trace executed scores 0.

inline double ochiai(double a_ef, double a_nf, double a_ep) {
  if (a_ef <= 0) return 0.0;
  return a_ef / std::sqrt((a_ef + a_nf) * (a_ef + a_ep));
}

inline double tarantula(double a_ef, double a_nf, double a_ep, double a_np) {
  const double fail_rate = (a_ef + a_nf) > 0 ? a_ef / (a_ef + a_nf) : 0.0;
  const double pass_rate = (a_ep + a_np) > 0 ? a_ep / (a_ep + a_np) : 0.0;
  if (fail_rate <= 0) return 0.0;
  return fail_rate / (fail_rate + pass_rate);
}

inline double jaccard(double a_ef, double a_nf, double a_ep) {
  if (a_ef <= 0) return 0.0;
  return a_ef / (a_ef + a_nf + a_ep);
}

inline double ochiai(const SpectraCounts& c) { return ochiai(c.a_ef, c.a_nf, c.a_ep); }
inline double tarantula(const SpectraCounts& c) { return tarantula(c.a_ef, c.a_nf, c.a_ep, c.a_np); }
inline double jaccard(const SpectraCounts& c) { return jaccard(c.a_ef, c.a_nf, c.a_ep); }

inline double suspiciousness(Metric m, const SpectraCounts& c, double a_ep) {
  switch (m) {
    case Metric::ochiai: return ochiai(c.a_ef, c.a_nf, a_ep);
    case Metric::tarantula: return tarantula(c.a_ef, c.a_nf, a_ep, c.a_np);
    case Metric::jaccard: return jaccard(c.a_ef, c.a_nf, a_ep);
  }
  return 0.0;
}

inline double suspiciousness(Metric m, const SpectraCounts& c) {
  return suspiciousness(m, c, c.a_ep);
}

/// How per-stack distances turn into the distance weight.
enum class BetaMode {
  offset,  ///< n / sum(dis + 1): total, 1 for on-stack entities
  raw,     ///< n / sum(dis); an all-zero sum counts each distance as 1/2
};

inline std::string_view to_string(BetaMode m) { return m == BetaMode::offset ? "offset" : "raw"; }

inline std::optional<BetaMode> parse_beta_mode(std::string_view name) {
  if (name == "offset") return BetaMode::offset;
  if (name == "raw") return BetaMode::raw;
  return std::nullopt;
}

/// Distances of one entity over the expanded traces that cover it.
struct DistanceSummary {
  std::uint32_t covering = 0;      // n
  std::uint64_t distance_sum = 0;  // sum of dis
  std::optional<std::uint32_t> min_depth;

  void add(std::uint32_t dis) {
    ++covering;
    distance_sum += dis;
    min_depth = min_depth ? std::min(*min_depth, dis) : dis;
  }

  double beta(BetaMode mode) const {
    if (covering == 0) return 1.0;
    const double n = covering;
    if (mode == BetaMode::offset) return n / (static_cast<double>(distance_sum) + n);
    if (distance_sum == 0) return n / (0.5 * n);
    return n / static_cast<double>(distance_sum);
  }
};

inline DistanceSummary summarize_distances(EntityId entity, std::span<const DepthMap> depth_maps) {
  DistanceSummary s;
  for (const auto& m : depth_maps)
    if (auto d = m.depth_of(entity)) s.add(*d);
  return s;
}

/// Distance weight of one entity; 1 when no expanded trace covers it.
inline double distance_weight(EntityId entity, std::span<const DepthMap> depth_maps,
                              BetaMode mode = BetaMode::offset) {
  return summarize_distances(entity, depth_maps).beta(mode);
}

struct CoverageAdjustment {
  /// Adjusted passing count per spectra column.
  std::vector<double> a_ep;
  /// Mean a_ep over entities with positive passing coverage (0 if none).
  double reference = 0.0;
  /// No entity has passing coverage: the adjustment degenerates to identity.
  bool no_reference = false;
};

/// Replaces a zero a_ep with the mean a_ep of the entities passing traces do
/// cover. Counts already positive are kept.
inline CoverageAdjustment adjust_coverage(const ProgramSpectra& spectra) {
  CoverageAdjustment adj;
  const auto counts = spectra.counts();
  std::uint64_t sum = 0;
  std::uint64_t covered = 0;
  for (const auto& c : counts) {
    sum += c.a_ep;
    covered += c.a_ep > 0 ? 1 : 0;
  }
  adj.no_reference = covered == 0;
  adj.reference = covered ? static_cast<double>(sum) / static_cast<double>(covered) : 0.0;
  adj.a_ep.reserve(counts.size());
  for (const auto& c : counts) adj.a_ep.push_back(c.a_ep > 0 ? c.a_ep : adj.reference);
  return adj;
}

struct ScoredEntity {
  EntityId entity;
  std::string name;
  double base_score = 0;               // S
  double coverage_adjusted_score = 0;  // S'
  double beta = 1;                     // distance weight
  double final_score = 0;              // S'' = S' * beta
  std::optional<std::uint32_t> min_depth;
};

/// Total order of the ranked list: final score descending, then nearest to
/// the stack, then name.
inline bool ranks_before(const ScoredEntity& a, const ScoredEntity& b) {
  if (a.final_score != b.final_score) return a.final_score > b.final_score;
  const auto da = a.min_depth.value_or(std::numeric_limits<std::uint32_t>::max());
  const auto db = b.min_depth.value_or(std::numeric_limits<std::uint32_t>::max());
  if (a.min_depth.has_value() != b.min_depth.has_value()) return a.min_depth.has_value();
  if (da != db) return da < db;
  return a.name < b.name;
}

struct SuspiciousnessReport {
  Metric metric = Metric::ochiai;
  bool use_h1 = true;
  bool use_h2 = true;
  BetaMode beta_mode = BetaMode::offset;
  std::optional<std::uint32_t> depth;
  /// Heuristic-2 was requested but had no passing coverage to average.
  bool coverage_warning = false;
  std::vector<ScoredEntity> entries;
};

struct ScoringOptions {
  Metric metric = Metric::ochiai;
  bool use_h1 = true;
  bool use_h2 = true;
  BetaMode beta_mode = BetaMode::offset;
  std::optional<std::uint32_t> depth;
  unsigned threads = 1;
};

/// Scores every spectra entity and returns the ranked report.
inline SuspiciousnessReport score_all(const ProgramSpectra& spectra, const EntityTable& table,
                                      const ScoringOptions& options,
                                      std::span<const DepthMap> depth_maps = {}) {
  SuspiciousnessReport report;
  report.metric = options.metric;
  report.use_h1 = options.use_h1;
  report.use_h2 = options.use_h2;
  report.beta_mode = options.beta_mode;
  report.depth = options.depth;

  const auto columns = spectra.entities();
  const auto counts = spectra.counts();

  std::vector<DistanceSummary> distances(columns.size());
  for (const auto& m : depth_maps)
    for (const auto& e : m.entries())
      if (auto col = spectra.column_of(e.entity)) distances[*col].add(e.depth);

  std::optional<CoverageAdjustment> adj;
  if (options.use_h2) {
    adj = adjust_coverage(spectra);
    report.coverage_warning = adj->no_reference;
  }

  report.entries.resize(columns.size());
  detail::parallel_for(columns.size(), options.threads, [&](std::size_t c) {
    ScoredEntity& s = report.entries[c];
    s.entity = columns[c];
    s.name = table.name(columns[c]);
    s.base_score = suspiciousness(options.metric, counts[c]);
    s.coverage_adjusted_score =
        adj ? suspiciousness(options.metric, counts[c], adj->a_ep[c]) : s.base_score;
    s.beta = options.use_h1 ? distances[c].beta(options.beta_mode) : 1.0;
    s.final_score = s.coverage_adjusted_score * s.beta;
    s.min_depth = distances[c].min_depth;
  });
  std::stable_sort(report.entries.begin(), report.entries.end(), ranks_before);
  return report;
}

inline constexpr std::string_view kReportHeader =
    "rank\tentity\tfinal_score\tbase_score\tcoverage_adjusted\tbeta\tmin_depth";

/// TSV report; scores at six decimals, rank from 1, "-" for no depth.
inline void write_report(std::ostream& out, const SuspiciousnessReport& report) {
  out << kReportHeader << '\n';
  std::size_t rank = 0;
  for (const auto& e : report.entries) {
    out << ++rank << '\t' << e.name << '\t' << detail::fixed6(e.final_score) << '\t'
        << detail::fixed6(e.base_score) << '\t' << detail::fixed6(e.coverage_adjusted_score) << '\t'
        << detail::fixed6(e.beta) << '\t';
    if (e.min_depth)
      out << *e.min_depth;
    else
      out << '-';
    out << '\n';
  }
}

/// Parses a report written by `write_report`. Scores carry the file's
/// six-decimal precision; entity ids are the 0-based row positions.
inline SuspiciousnessReport read_report(std::istream& in, const std::string& source) {
  SuspiciousnessReport report;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    if (!have_header) {
      if (line != kReportHeader) throw InputError(source, lineno, "unexpected report header");
      have_header = true;
      continue;
    }
    const auto f = detail::split(line, '\t');
    if (f.size() != 7) throw InputError(source, lineno, "expected 7 TAB-separated fields");
    const auto number = [&](std::string_view field, auto& out) {
      const auto* end = field.data() + field.size();
      const auto [ptr, ec] = std::from_chars(field.data(), end, out);
      if (ec != std::errc{} || ptr != end) throw InputError(source, lineno, "malformed numeric field");
      if constexpr (std::is_floating_point_v<std::remove_reference_t<decltype(out)>>) {
        if (!std::isfinite(out)) throw InputError(source, lineno, "non-finite score");
      }
    };
    ScoredEntity e;
    std::size_t rank = 0;
    number(f[0], rank);
    if (rank != report.entries.size() + 1) throw InputError(source, lineno, "ranks must count up from 1");
    e.entity = EntityId{static_cast<std::uint32_t>(report.entries.size())};
    e.name = std::string(f[1]);
    number(f[2], e.final_score);
    number(f[3], e.base_score);
    number(f[4], e.coverage_adjusted_score);
    number(f[5], e.beta);
    if (f[6] != "-") {
      std::uint32_t d = 0;
      number(f[6], d);
      e.min_depth = d;
    }
    if (e.name.empty()) throw InputError(source, lineno, "empty entity name");
    report.entries.push_back(std::move(e));
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  if (!have_header) throw InputError(source, 0, "missing report header");
  if (report.entries.empty()) throw InputError(source, 0, "report has no entries");
  return report;
}

}  // namespace crashloc
