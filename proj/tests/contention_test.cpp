#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "micsnet/contention.hpp"

using namespace micsnet;
using namespace testfix;

TEST_SUITE("contention") {
  TEST_CASE("coexistence by carrier sense and capture") {
    SignalField f = trio_field();
    RadioParams radio = unit_radio();
    // A and B share an audible source pair, A and C / B and C do not.
    CHECK_FALSE(can_coexist(f, radio, {0, 1}, {2, 3}));
    CHECK(can_coexist(f, radio, {0, 1}, {4, 5}));
    CHECK(can_coexist(f, radio, {2, 3}, {4, 5}));
  }

  TEST_CASE("graph adjacency matches pairwise coexistence") {
    SignalField f = trio_field();
    RadioParams radio = unit_radio();
    ContentionGraph g(trio_links(), f, radio);
    REQUIRE(g.size() == 3);
    for (LinkId a = 0; a < 3; ++a) {
      CHECK_FALSE(g.concurrent(a, a));
      for (LinkId b = 0; b < 3; ++b)
        if (a != b) CHECK(g.concurrent(a, b) == can_coexist(f, radio, g.link(a), g.link(b)));
    }
  }

  TEST_CASE("trio contention sets") {
    ContentionGraph g(trio_links(), trio_field(), unit_radio());
    MicsFamily mics = enumerate_mics_exact(g);
    CHECK(sorted_family(mics.sets) == std::vector<LinkSet>{{0, 2}, {1, 2}});
    REQUIRE(mics.activation.size() == 2);
    double total = 0.0;
    for (double a : mics.activation) {
      CHECK(a > 0.0);
      total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (LinkId l = 0; l < 3; ++l)
      for (std::uint32_t ci : mics.membership[l])
        CHECK(std::find(mics.sets[ci].begin(), mics.sets[ci].end(), l) != mics.sets[ci].end());
  }

  TEST_CASE("exact enumeration equals subset sweep on random graphs") {
    std::mt19937_64 rng(0x636f6e74u);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t m = 1 + rng() % 12;
      ContentionGraph g = random_graph(rng, m);
      MicsFamily mics = enumerate_mics_exact(g, 25);
      CAPTURE(trial);
      CAPTURE(m);
      CHECK(sorted_family(mics.sets) == brute_force_mics(g));
    }
  }

  TEST_CASE("heuristic enumeration is a covering subset of the exact family") {
    std::mt19937_64 rng(0x68657572u);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t m = 2 + rng() % 11;
      ContentionGraph g = random_graph(rng, m);
      auto exact = sorted_family(enumerate_mics_exact(g, 25).sets);
      MicsFamily heur = enumerate_mics_heuristic(g, 8, 0x6d696373u);
      std::vector<bool> covered(m, false);
      for (LinkSet s : heur.sets) {
        std::sort(s.begin(), s.end());
        CAPTURE(trial);
        CHECK(std::binary_search(exact.begin(), exact.end(), s));
        for (LinkId l : s) covered[l] = true;
      }
      for (std::size_t l = 0; l < m; ++l) CHECK(covered[l]);
    }
  }

  TEST_CASE("existent subsets stay inside their parents") {
    ContentionGraph g(trio_links(), trio_field(), unit_radio());
    MicsFamily mics = enumerate_mics_exact(g);
    EmicsFamily emics = enumerate_emics(g, mics, trio_field(), unit_radio());
    CHECK(sorted_family(emics.sets) == std::vector<LinkSet>{{0}, {1, 2}, {2}});
    REQUIRE(emics.parent.size() == emics.sets.size());
    for (std::size_t i = 0; i < emics.sets.size(); ++i) {
      const LinkSet& parent = mics.sets[emics.parent[i]];
      for (LinkId l : emics.sets[i])
        CHECK(std::find(parent.begin(), parent.end(), l) != parent.end());
    }
  }

  TEST_CASE("adjacency round trip") {
    std::mt19937_64 rng(0x61646a32u);
    ContentionGraph g = random_graph(rng, 9);
    std::vector<char> adj(9 * 9, 0);
    for (LinkId a = 0; a < 9; ++a)
      for (LinkId b = 0; b < 9; ++b) adj[a * 9 + b] = g.concurrent(a, b) ? 1 : 0;
    ContentionGraph h = ContentionGraph::from_adjacency(g.links(), adj);
    for (LinkId a = 0; a < 9; ++a)
      for (LinkId b = 0; b < 9; ++b) CHECK(h.concurrent(a, b) == g.concurrent(a, b));
  }

  TEST_CASE("set dump is deterministic") {
    ContentionGraph g(trio_links(), trio_field(), unit_radio());
    MicsFamily mics = enumerate_mics_exact(g);
    std::ostringstream a, b;
    dump_sets(a, mics.sets);
    dump_sets(b, mics.sets);
    CHECK(a.str() == b.str());
    CHECK_FALSE(a.str().empty());
  }
}
