#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace cl = crashloc;

namespace {

cl::ExecutionTrace trace(const char* id, std::vector<std::uint32_t> hits, cl::TraceLabel label) {
  std::vector<cl::EntityId> ids;
  for (auto h : hits) ids.push_back(cl::EntityId{h});
  return cl::make_trace(id, std::move(ids), label);
}

}  // namespace

TEST(Spectra, CountsMatchRecountOnRandomMatrices) {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 50; ++round) {
    const std::uint32_t width = 1 + rng() % 30;
    const int nf = 1 + static_cast<int>(rng() % 8), np = static_cast<int>(rng() % 12);
    std::vector<cl::ExecutionTrace> failing, passing;
    std::vector<std::vector<char>> dense;
    for (int r = 0; r < nf + np; ++r) {
      std::vector<std::uint32_t> hits;
      std::vector<char> row(width, 0);
      for (std::uint32_t c = 0; c < width; ++c)
        if (rng() % 3 == 0) {
          hits.push_back(c);
          row[c] = 1;
        }
      dense.push_back(row);
      auto t = trace("t", hits, r < nf ? cl::TraceLabel::fail : cl::TraceLabel::pass);
      (r < nf ? failing : passing).push_back(std::move(t));
    }
    const auto s = cl::build_spectra(failing, passing);
    EXPECT_EQ(s.failing_count(), static_cast<std::size_t>(nf));
    EXPECT_EQ(s.passing_count(), static_cast<std::size_t>(np));
    for (std::uint32_t c = 0; c < width; ++c) {
      cl::SpectraCounts ref;
      bool seen = false;
      for (int r = 0; r < nf + np; ++r) {
        const bool fail = r < nf;
        seen |= dense[r][c] != 0;
        if (dense[r][c]) (fail ? ref.a_ef : ref.a_ep)++;
        else (fail ? ref.a_nf : ref.a_np)++;
      }
      const auto* got = s.counts_of(cl::EntityId{c});
      if (!seen) {
        EXPECT_EQ(got, nullptr);  // never hit: not a column
        continue;
      }
      ASSERT_NE(got, nullptr);
      EXPECT_EQ(*got, ref);
      EXPECT_EQ(got->total(), static_cast<std::uint32_t>(nf + np));
    }
  }
}

TEST(Spectra, NoFailingTracesIsAnError) {
  EXPECT_THROW(cl::build_spectra({}, {trace("p", {0}, cl::TraceLabel::pass)}), cl::Error);
}

TEST(Spectra, LabelsMustMatchPartition) {
  EXPECT_THROW(cl::build_spectra({trace("p", {0}, cl::TraceLabel::pass)}, {}), std::invalid_argument);
}

TEST(Spectra, PassingIngestionMatchesPerNameTally) {
  // 1,150 synthetic records with a known per-name tally.
  std::ostringstream file;
  std::map<std::string, std::uint32_t> tally;
  std::mt19937_64 rng(1150);
  for (int i = 0; i < 1150; ++i) {
    file << "{\"id\":\"p" << i << "\",\"hits\":[";
    std::set<int> names;
    for (int k = 0; k < 4; ++k) names.insert(static_cast<int>(rng() % 40));
    bool first = true;
    for (int n : names) {
      file << (first ? "" : ",") << "\"fn" << n << "\"";
      first = false;
      ++tally["fn" + std::to_string(n)];
    }
    file << "]}\n";
  }
  cl::EntityTable t;
  std::istringstream in(file.str());
  auto passing = cl::ingest_passing_traces(in, t, "passing");
  ASSERT_EQ(passing.size(), 1150u);
  const auto fail = cl::make_trace("f", {*t.find("fn0")}, cl::TraceLabel::fail);
  const auto s = cl::build_spectra({fail}, passing);
  for (const auto& [name, count] : tally) EXPECT_EQ(s.counts_of(*t.find(name))->a_ep, count) << name;
}

TEST(Spectra, PassingFileRejectsFailLabel) {
  cl::EntityTable t;
  std::istringstream in("{\"id\":\"a\",\"hits\":[\"x\"],\"label\":\"fail\"}\n");
  EXPECT_THROW(cl::ingest_passing_traces(in, t, "p"), cl::InputError);
}

TEST(SpectraMatrix, ReadsBothRowStylesAndRoundTrips) {
  cl::EntityTable t;
  std::istringstream in("s1\ts2\ts3\n1\t0\t1\tfail\n011\tpass\n");
  auto m = cl::read_spectra_matrix(in, t, "m.tsv");
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_EQ(m.rows[0].trace_id, "T1");
  EXPECT_EQ(m.rows[1].hits.size(), 2u);
  const auto s = cl::ProgramSpectra::from_matrix(m.columns, m.rows);
  EXPECT_EQ(s.counts_of(*t.find("s1"))->a_ef, 1u);
  EXPECT_EQ(s.counts_of(*t.find("s2"))->a_ep, 1u);

  std::ostringstream out;
  cl::write_spectra_matrix(out, s, t);
  cl::EntityTable t2;
  std::istringstream back(out.str());
  const auto m2 = cl::read_spectra_matrix(back, t2, "again");
  ASSERT_EQ(m2.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(m2.rows[r].hits.size(), m.rows[r].hits.size());
}

TEST(SpectraMatrix, MalformedRowsNameTheLine) {
  cl::EntityTable t;
  std::istringstream in("a\tb\n1\t0\tfail\n1\t2\tpass\n");
  try {
    cl::read_spectra_matrix(in, t, "m.tsv");
    FAIL();
  } catch (const cl::InputError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
