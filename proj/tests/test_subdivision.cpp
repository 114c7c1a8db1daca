#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <set>

#include "doctest.h"
#include "spmx/subdivision.hpp"

using namespace spmx;

namespace {

Instance square_instance() {
  Instance inst;
  inst.obstacles.emplace_back(
      std::vector<Point>{{1, 1}, {2, 1}, {2, 2}, {1, 2}});
  inst.source = {0, 0};
  inst.name = "unit-square";
  return inst;
}

// Independent recomputation of output(e) from the input lists alone.
std::vector<int> oracle_output(const Subdivision& sub, int eid) {
  std::set<int> out;
  const auto& edges = sub.edges();
  const std::vector<int> in = sub.input_of(eid);
  out.insert(in.begin(), in.end());
  for (const auto& g : edges) {
    const std::vector<int> gin = sub.input_of(g.id);
    if (std::count(gin.begin(), gin.end(), eid)) out.insert(g.id);
  }
  return {out.begin(), out.end()};
}

}  // namespace

TEST_CASE("quadtree cells partition and separate V points") {
  Instance inst = square_instance();
  Subdivision sub(inst);
  const auto& cells = sub.cells();
  // every interior node has 4 children tiling it
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SubCell& c = cells[i];
    if (c.leaf()) continue;
    double area = 0;
    for (int k = 0; k < 4; ++k) {
      const SubCell& ch = cells[c.children[k]];
      CHECK(ch.parent == static_cast<int>(i));
      CHECK(ch.size == doctest::Approx(0.5 * c.size));
      CHECK(ch.x0 >= c.x0);
      CHECK(ch.y0 >= c.y0);
      area += ch.size * ch.size;
    }
    CHECK(area == doctest::Approx(c.size * c.size));
  }
  // each V point in exactly one leaf; that leaf records it
  for (std::size_t v = 0; v < sub.v_points().size(); ++v) {
    const int leaf = sub.locate_leaf(sub.v_points()[v]);
    REQUIRE(leaf >= 0);
    CHECK(cells[leaf].vpoint == static_cast<int>(v));
  }
}

TEST_CASE("balance: touching leaves differ by at most one level") {
  Instance inst = generate_instance(7, 4);
  Subdivision sub(inst);
  const auto& cells = sub.cells();
  std::vector<int> touching;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].leaf()) continue;
    sub.leaves_overlapping(cells[i].box(), touching);
    for (int nb : touching) {
      if (nb == static_cast<int>(i)) continue;
      CHECK(std::abs(cells[nb].depth - cells[i].depth) <= 1);
    }
  }
}

TEST_CASE("transparent edges avoid obstacle interiors") {
  Instance inst = square_instance();
  Subdivision sub(inst);
  REQUIRE(!sub.edges().empty());
  for (const auto& e : sub.edges()) {
    for (double t : {0.1, 0.5, 0.9}) {
      CHECK(!inst.inside_obstacle(e.seg.at(t)));
    }
    CHECK(e.len > 0);
    CHECK(e.id >= 0);
    // axis-parallel except for the rare fan fallback spokes
    if (!e.spoke) CHECK((e.seg.a.x == e.seg.b.x || e.seg.a.y == e.seg.b.y));
  }
}

TEST_CASE("well-covering regions satisfy the full property checker") {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    Instance inst = generate_instance(seed, 3);
    Subdivision sub(inst);
    VisibilityOracle oracle(inst);
    PropertyReport rep = verify_properties(sub, oracle);
    for (const auto& w : rep.witnesses)
      MESSAGE(w.property, ": ", w.detail, " e=", w.edge_e, " f=", w.edge_f, " c=", w.cell);
    CHECK(rep.pass());
  }
}

TEST_CASE("square obstacle: checker passes and source has incident edges") {
  Instance inst = square_instance();
  Subdivision sub(inst);
  VisibilityOracle oracle(inst);
  PropertyReport rep = verify_properties(sub, oracle);
  for (const auto& w : rep.witnesses)
    MESSAGE(w.property, ": ", w.detail, " e=", w.edge_e, " f=", w.edge_f, " c=", w.cell);
  CHECK(rep.pass());
  CHECK(!sub.edges_at_vpoint(sub.source_vpoint()).empty());
}

TEST_CASE("output(e) equals input(e) union reverse-input, independently recomputed") {
  Instance inst = square_instance();
  Subdivision sub(inst);
  for (const auto& e : sub.edges()) {
    const std::vector<int> in = sub.input_of(e.id);
    const std::vector<int> out = sub.output_of(e.id);
    CHECK(out == oracle_output(sub, e.id));
    CHECK(std::is_sorted(in.begin(), in.end()));
    CHECK(std::includes(out.begin(), out.end(), in.begin(), in.end()));
  }
}

TEST_CASE("every input edge meets the clearance contract") {
  Instance inst = generate_instance(11, 2);
  Subdivision sub(inst);
  const auto& edges = sub.edges();
  for (const auto& e : edges) {
    CHECK(static_cast<int>(e.ucells.size()) <= Subdivision::kMaxUCells);
    for (int fi : sub.input_of(e.id)) {
      const double need = 2.0 * std::max(e.len, edges[fi].len);
      CHECK(dist_segment_segment(e.seg, edges[fi].seg) * (1 + 1e-9) >= need);
    }
  }
}

TEST_CASE("subdivision size stays linear in n") {
  std::size_t prev_edges = 0;
  for (std::size_t n : {16, 32, 64}) {
    Instance inst = generate_instance_n(3, n);
    Subdivision sub(inst);
    const std::size_t e = sub.edges().size();
    if (prev_edges) CHECK(e < prev_edges * 8);  // generous linearity envelope
    prev_edges = e;
    CHECK(e > 0);
  }
}
