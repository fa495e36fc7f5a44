#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace cl = crashloc;
using cl::testing::random_graph;
using cl::testing::random_sparse_graph;
using cl::testing::relax_distances;

namespace {

cl::CallGraph parse(const std::string& text, cl::EntityTable& table) {
  std::istringstream in(text);
  return cl::read_call_graph(in, table, "g.tsv");
}

const char* kSampleGraph =
    "f1\tf2\nf1\tf3\nf1\tf4\nf2\tf5\nf3\tf6\nf3\tf12\nf4\tf13\nf6\tf12\n"
    "f12\tf11\nf12\tf13\nf11\tf14\nf4\tf7\nf6\tf8\nf13\tf9\n";

}  // namespace

TEST(EntityTable, InternIsIdempotentAndDense) {
  cl::EntityTable t;
  EXPECT_EQ(t.intern("a").value, 0u);
  EXPECT_EQ(t.intern("b").value, 1u);
  EXPECT_EQ(t.intern("a").value, 0u);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.name(cl::EntityId{1}), "b");
  EXPECT_FALSE(t.find("zzz").has_value());
  EXPECT_THROW(t.intern(""), std::invalid_argument);
}

TEST(CallGraphIo, ParsesEdgesCommentsAndIsolatedEntities) {
  cl::EntityTable t;
  const auto g = parse("# comment\nmain\tfoo\n\nmain\tfoo\n@entity\tlonely\nfoo\tbar\n", t);
  EXPECT_EQ(g.entity_count(), 4u);
  EXPECT_EQ(g.edge_count(), 2u);  // duplicate collapsed
  EXPECT_TRUE(g.has_edge(*t.find("main"), *t.find("foo")));
  EXPECT_TRUE(g.callees(*t.find("lonely")).empty());
}

TEST(CallGraphIo, ReportsLineOfMalformedInput) {
  cl::EntityTable t;
  try {
    parse("a\tb\nonly-one-field\n", t);
    FAIL() << "expected an input error";
  } catch (const cl::InputError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("g.tsv:2:"), std::string::npos);
  }
  cl::EntityTable t2;
  EXPECT_THROW(parse("a\t\n", t2), cl::InputError);
  cl::EntityTable t3;
  EXPECT_THROW(parse("# nothing\n", t3), cl::InputError);
}

TEST(CallGraphIo, ThousandNodeRoundTripIsExact) {
  std::mt19937_64 rng(7);
  auto rg = random_sparse_graph(rng, 1000, 3.0);
  std::ostringstream out;
  cl::write_call_graph(out, rg.graph, rg.table);

  cl::EntityTable t2;
  const auto g2 = parse(out.str(), t2);
  ASSERT_EQ(g2.entity_count(), rg.graph.entity_count());
  ASSERT_EQ(g2.edge_count(), rg.graph.edge_count());
  for (std::uint32_t i = 0; i < 1000; ++i) EXPECT_EQ(t2.name(cl::EntityId{i}), rg.table.name(cl::EntityId{i}));
  EXPECT_EQ(g2.edges(), rg.graph.edges());

  std::ostringstream again;
  cl::write_call_graph(again, g2, t2);
  EXPECT_EQ(again.str(), out.str());
}

TEST(CallDepths, SampleGraphDepths) {
  cl::EntityTable t;
  const auto g = parse(kSampleGraph, t);
  const cl::StackTrace stack{"s", {"f11", "f12", "f3", "f1"}, std::nullopt};
  const auto m = cl::compute_call_depths(g, t, stack, cl::kUnbounded);
  for (const char* frame : {"f1", "f3", "f12", "f11"}) EXPECT_EQ(m.depth_of(*t.find(frame)), 0u) << frame;
  EXPECT_EQ(m.depth_of(*t.find("f13")), 1u);
  EXPECT_EQ(m.depth_of(*t.find("f14")), 1u);
  EXPECT_EQ(m.depth_of(*t.find("f9")), 2u);
  EXPECT_EQ(m.depth_of(*t.find("f5")), 2u);
}

TEST(CallDepths, HorizonCutsDeeperEntities) {
  cl::EntityTable t;
  const auto g = parse(kSampleGraph, t);
  const cl::StackTrace stack{"s", {"f11", "f12", "f3", "f1"}, std::nullopt};
  const auto m = cl::compute_call_depths(g, t, stack, 1);
  EXPECT_TRUE(m.contains(*t.find("f13")));
  EXPECT_FALSE(m.contains(*t.find("f9")));
  EXPECT_EQ(m.max_depth(), 1u);
}

TEST(CallDepths, MatchesEdgeRelaxationOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 60; ++round) {
    const std::size_t n = 2 + rng() % 120;
    auto rg = random_graph(rng, n, 1.5 / static_cast<double>(n));
    std::vector<std::uint32_t> seeds;
    cl::ResolvedStack rs{"s", {}, {}};
    for (int k = 0, want = 1 + static_cast<int>(rng() % 4); k < want; ++k) {
      const auto s = static_cast<std::uint32_t>(rng() % n);
      seeds.push_back(s);
      rs.seeds.push_back(cl::EntityId{s});
    }
    const auto ref = relax_distances(n, rg.edges, seeds);
    const auto m = cl::compute_call_depths(rg.graph, rs, cl::kUnbounded);
    for (std::uint32_t v = 0; v < n; ++v) {
      const auto got = m.depth_of(cl::EntityId{v});
      if (ref[v] == cl::kUnbounded)
        EXPECT_FALSE(got.has_value());
      else
        EXPECT_EQ(got, ref[v]);
    }
  }
}

TEST(CallDepths, EmptySeedSetIsAnError) {
  cl::EntityTable t;
  const auto g = parse("a\tb\n", t);
  EXPECT_THROW(cl::compute_call_depths(g, cl::ResolvedStack{"s", {}, {}}, 3), cl::Error);
  const cl::StackTrace unknown{"s", {"nope"}, std::nullopt};
  EXPECT_THROW(cl::compute_call_depths(g, t, unknown, 3), cl::Error);
}

TEST(CallDepths, CyclesAndSelfLoopsTerminate) {
  cl::EntityTable t;
  const auto g = parse("a\ta\na\tb\nb\tc\nc\ta\n", t);
  const cl::StackTrace s{"s", {"a"}, std::nullopt};
  const auto m = cl::compute_call_depths(g, t, s, cl::kUnbounded);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.depth_of(*t.find("c")), 2u);
}

TEST(FrameResolver, StripParamsMapsOverloadsToAllMatches) {
  cl::EntityTable t;
  const auto g = parse("main()\tfoo(int)\nmain()\tfoo(char*)\nfoo(int)\tbar()\n", t);
  const cl::StackTrace s{"s", {"foo(double)", "main"}, std::nullopt};

  const auto exact = cl::FrameResolver(g, t).resolve(s);
  EXPECT_TRUE(exact.seeds.empty());
  EXPECT_EQ(exact.unresolved.size(), 2u);

  const auto loose = cl::FrameResolver(g, t, {true}).resolve(s);
  EXPECT_EQ(loose.seeds.size(), 3u);  // both foo overloads and main
  EXPECT_TRUE(loose.unresolved.empty());
  EXPECT_EQ(cl::strip_params("ns::A::f(int, char) const"), "ns::A::f");
  EXPECT_EQ(cl::strip_params("plain"), "plain");
}

TEST(FrameResolver, DuplicateFramesSeedOnce) {
  cl::EntityTable t;
  const auto g = parse("a\tb\n", t);
  const auto r = cl::FrameResolver(g, t).resolve({"s", {"b", "a", "b"}, std::nullopt});
  ASSERT_EQ(r.seeds.size(), 2u);
  EXPECT_EQ(t.name(r.seeds[0]), "b");
}
