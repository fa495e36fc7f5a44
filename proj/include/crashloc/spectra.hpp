#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crashloc/detail/text.hpp"
#include "crashloc/entity.hpp"
#include "crashloc/error.hpp"
#include "crashloc/trace.hpp"
#include "crashloc/trace_io.hpp"

namespace crashloc {

/// Per-entity hit counters over failing (f) and passing (p) traces.
struct SpectraCounts {
  std::uint32_t a_ef = 0;  // failing traces that hit the entity
  std::uint32_t a_ep = 0;  // passing traces that hit it
  std::uint32_t a_nf = 0;  // failing traces that missed it
  std::uint32_t a_np = 0;  // passing traces that missed it

  std::uint32_t total() const noexcept { return a_ef + a_ep + a_nf + a_np; }
  friend bool operator==(const SpectraCounts&, const SpectraCounts&) = default;
};

/// Trace-by-entity hit matrix with its counters. Columns are entity ids in
/// ascending order; rows are the traces in the order they were supplied.
class ProgramSpectra {
 public:
  /// Column set = union of entities hit by any trace.
  static ProgramSpectra build(std::vector<ExecutionTrace> failing,
                              std::vector<ExecutionTrace> passing) {
    if (failing.empty()) throw Error("no failing traces");
    std::vector<EntityId> columns;
    for (auto* group : {&failing, &passing})
      for (const auto& t : *group) columns.insert(columns.end(), t.hits.begin(), t.hits.end());
    normalize_hits(columns);

    std::vector<ExecutionTrace> rows;
    rows.reserve(failing.size() + passing.size());
    for (auto& t : failing) {
      if (t.label != TraceLabel::fail) throw std::invalid_argument("failing trace labeled pass");
      rows.push_back(std::move(t));
    }
    for (auto& t : passing) {
      if (t.label != TraceLabel::pass) throw std::invalid_argument("passing trace labeled fail");
      rows.push_back(std::move(t));
    }
    return ProgramSpectra(std::move(columns), std::move(rows));
  }

  /// Explicit column set; columns may be all-zero. Every hit must be a column.
  static ProgramSpectra from_matrix(std::vector<EntityId> columns, std::vector<ExecutionTrace> rows) {
    normalize_hits(columns);
    return ProgramSpectra(std::move(columns), std::move(rows));
  }

  std::span<const EntityId> entities() const noexcept { return columns_; }
  std::span<const SpectraCounts> counts() const noexcept { return counts_; }
  std::span<const ExecutionTrace> traces() const noexcept { return rows_; }

  std::size_t entity_count() const noexcept { return columns_.size(); }
  std::size_t failing_count() const noexcept { return failing_; }
  std::size_t passing_count() const noexcept { return rows_.size() - failing_; }

  std::optional<std::size_t> column_of(EntityId id) const noexcept {
    if (id.value >= column_index_.size() || column_index_[id.value] < 0) return std::nullopt;
    return static_cast<std::size_t>(column_index_[id.value]);
  }

  const SpectraCounts* counts_of(EntityId id) const noexcept {
    const auto col = column_of(id);
    return col ? &counts_[*col] : nullptr;
  }

 private:
  ProgramSpectra(std::vector<EntityId> columns, std::vector<ExecutionTrace> rows)
      : columns_(std::move(columns)), rows_(std::move(rows)) {
    const std::size_t span = columns_.empty() ? 0 : columns_.back().value + 1;
    column_index_.assign(span, -1);
    for (std::size_t c = 0; c < columns_.size(); ++c)
      column_index_[columns_[c].value] = static_cast<std::int32_t>(c);

    counts_.assign(columns_.size(), SpectraCounts{});
    std::uint32_t failing = 0, passing = 0;
    for (const auto& row : rows_) {
      const bool fail = row.label == TraceLabel::fail;
      (fail ? failing : passing)++;
      for (EntityId id : row.hits) {
        const auto col = column_of(id);
        if (!col) throw std::invalid_argument("trace hit outside the spectra columns");
        (fail ? counts_[*col].a_ef : counts_[*col].a_ep)++;
      }
    }
    failing_ = failing;
    for (auto& c : counts_) {
      c.a_nf = failing - c.a_ef;
      c.a_np = passing - c.a_ep;
    }
  }

  std::vector<EntityId> columns_;
  std::vector<std::int32_t> column_index_;
  std::vector<ExecutionTrace> rows_;
  std::vector<SpectraCounts> counts_;
  std::size_t failing_ = 0;
};

inline ProgramSpectra build_spectra(std::vector<ExecutionTrace> failing,
                                    std::vector<ExecutionTrace> passing) {
  return ProgramSpectra::build(std::move(failing), std::move(passing));
}

/// Passing-trace JSON Lines. Unknown names extend `table`; any record
/// explicitly labeled "fail" is rejected.
inline std::vector<ExecutionTrace> ingest_passing_traces(std::istream& in, EntityTable& table,
                                                         const std::string& source) {
  auto traces = read_traces(in, table, source, TraceLabel::pass);
  for (const auto& t : traces)
    if (t.label != TraceLabel::pass)
      throw InputError(source, 0, "trace '" + t.trace_id + "' is not a passing trace");
  return traces;
}

struct SpectraMatrix {
  std::vector<EntityId> columns;
  std::vector<ExecutionTrace> rows;
};

/// Compact matrix form: a header of TAB-separated entity names, then one row
/// per trace with a TAB-separated 0/1 cell per column and a trailing
/// pass/fail cell. A row may also pack its cells into one 0/1 string
/// (`0110<TAB>fail`). Rows are named T1, T2, ... in file order.
inline SpectraMatrix read_spectra_matrix(std::istream& in, EntityTable& table,
                                         const std::string& source) {
  SpectraMatrix m;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<EntityId> header;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty() || line.front() == '#') continue;
    const auto fields = detail::split(line, '\t');
    if (!have_header) {
      for (auto f : fields) {
        const auto name = detail::trim(f);
        if (name.empty()) throw InputError(source, lineno, "empty entity name in header");
        header.push_back(table.intern(name));
      }
      auto sorted = header;
      normalize_hits(sorted);
      if (sorted.size() != header.size()) throw InputError(source, lineno, "duplicate column name");
      m.columns = std::move(sorted);
      have_header = true;
      continue;
    }
    if (fields.size() < 2) throw InputError(source, lineno, "row needs cells and a pass/fail label");
    const auto label_text = detail::trim(fields.back());
    TraceLabel label;
    if (label_text == "pass")
      label = TraceLabel::pass;
    else if (label_text == "fail")
      label = TraceLabel::fail;
    else
      throw InputError(source, lineno, "last cell must be pass or fail");

    std::string cells;
    if (fields.size() == 2 && header.size() != 1) {
      cells = std::string(detail::trim(fields[0]));
    } else {
      for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
        const auto cell = detail::trim(fields[i]);
        if (cell.size() != 1) throw InputError(source, lineno, "cells must be 0 or 1");
        cells.push_back(cell.front());
      }
    }
    if (cells.size() != header.size())
      throw InputError(source, lineno,
                       "expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    std::vector<EntityId> hits;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c] == '1')
        hits.push_back(header[c]);
      else if (cells[c] != '0')
        throw InputError(source, lineno, "cells must be 0 or 1");
    }
    m.rows.push_back(make_trace("T" + std::to_string(m.rows.size() + 1), std::move(hits), label));
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  if (!have_header) throw InputError(source, 0, "missing header line");
  if (m.rows.empty()) throw InputError(source, 0, "no trace rows");
  return m;
}

inline void write_spectra_matrix(std::ostream& out, const ProgramSpectra& spectra,
                                 const EntityTable& table) {
  const auto cols = spectra.entities();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "\t" : "") << table.name(cols[c]);
  out << '\n';
  for (const auto& row : spectra.traces()) {
    std::size_t h = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const bool hit = h < row.hits.size() && row.hits[h] == cols[c];
      if (hit) ++h;
      out << (hit ? '1' : '0') << '\t';
    }
    out << to_string(row.label) << '\n';
  }
}

}  // namespace crashloc
