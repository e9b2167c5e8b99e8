#include "martrace/filtration.hpp"

#include <doctest.h>

#include <set>

using namespace martrace;

namespace {

MeasureSpace unit_space(int level) {
  return build_space(Interval{0.0, 1.0}, Uniform{1.0}, level);
}

AtomSet range_set(Eigen::Index lo, Eigen::Index hi) {
  AtomSet s;
  for (Eigen::Index i = lo; i < hi; ++i) s.push_back(i);
  return s;
}

}  // namespace

TEST_CASE("dyadic level cells and measures") {
  const auto space = unit_space(4);
  const auto f = build_dyadic(space, 2);
  REQUIRE(f.depth() == 2);
  REQUIRE(f.levels[2].cells.size() == 4);
  for (const auto& c : f.levels[2].cells)
    CHECK(c.measure == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("dyadic with 2x density") {
  const auto space = build_space(Interval{0.0, 1.0}, Polynomial{{0.0, 2.0}}, 4);
  const auto f = build_dyadic(space, 1);
  REQUIRE(f.levels[1].cells.size() == 2);
  CHECK(f.levels[1].cells[0].measure == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f.levels[1].cells[1].measure == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("torus refinement has four children per cell") {
  const auto space = build_space(Torus2{1.0, 1.0}, Uniform{1.0}, 3);
  const auto f = build_dyadic(space, 2);
  REQUIRE(f.levels[2].cells.size() == 16);
  for (const auto& parent : f.levels[1].cells) {
    std::set<Eigen::Index> children;
    for (auto a : parent.atom_indices)
      children.insert(f.levels[2].atom_to_cell[static_cast<std::size_t>(a)]);
    CHECK(children.size() == 4);
  }
}

TEST_CASE("refinement and measure additivity") {
  const auto space = build_space(Interval{0.0, 1.0}, Polynomial{{0.2, 0.0, 2.0}}, 6);
  const auto f = build_dyadic(space, 6);
  for (int n = 0; n < f.depth(); ++n) {
    // child -> parent consistency, atom by atom
    for (Eigen::Index a = 0; a < space.atom_count(); ++a) {
      const Cell& parent = f.cell_of_atom(n, a);
      const Cell& child = f.cell_of_atom(n + 1, a);
      for (auto b : child.atom_indices) CHECK(f.cell_of_atom(n, b).id == parent.id);
    }
    // each parent measure equals the sum of its children
    for (const auto& parent : f.levels[static_cast<std::size_t>(n)].cells) {
      std::set<Eigen::Index> children;
      for (auto a : parent.atom_indices)
        children.insert(f.levels[static_cast<std::size_t>(n + 1)]
                            .atom_to_cell[static_cast<std::size_t>(a)]);
      double sum = 0.0;
      for (auto id : children)
        sum += f.levels[static_cast<std::size_t>(n + 1)]
                   .cells[static_cast<std::size_t>(id)]
                   .measure;
      CHECK(parent.measure == doctest::Approx(sum).epsilon(1e-12));
    }
  }
}

TEST_CASE("every atom has exactly one cell per level") {
  const auto space = unit_space(5);
  const auto f = build_dyadic(space, 5);
  for (const auto& part : f.levels) {
    std::vector<int> seen(static_cast<std::size_t>(space.atom_count()), 0);
    for (const auto& c : part.cells)
      for (auto a : c.atom_indices) seen[static_cast<std::size_t>(a)]++;
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("depth cap") {
  const auto space = unit_space(3);
  CHECK_THROWS_AS(build_dyadic(space, 4), FiltrationError);
}

TEST_CASE("cover chain builds P_0 by set differences") {
  const auto space = unit_space(4);  // 16 atoms
  Cover cover;
  cover.sets = {range_set(0, 12), range_set(4, 16)};  // [0,0.75), [0.25,1)
  const auto f = build_from_cover(space, cover, {}, 0);

  std::vector<const Cell*> real;
  for (const auto& c : f.levels[0].cells)
    if (!c.ghost) real.push_back(&c);
  REQUIRE(real.size() == 2);
  CHECK(real[0]->atom_indices == range_set(0, 12));
  CHECK(real[1]->atom_indices == range_set(12, 16));
  CHECK(real[0]->measure == doctest::Approx(0.75).epsilon(1e-12));

  // frontier ghosts recorded with zero measure
  int ghosts = 0;
  for (const auto& c : f.levels[0].cells)
    if (c.ghost) {
      ++ghosts;
      CHECK(c.measure == 0.0);
    }
  CHECK(ghosts == 2);
}

TEST_CASE("cover split by basis set") {
  const auto space = unit_space(4);
  Cover cover;
  cover.sets = {range_set(0, 12), range_set(4, 16)};
  const auto f = build_from_cover(space, cover, {range_set(0, 8)}, 1);

  std::vector<AtomSet> sets;
  for (const auto& c : f.levels[1].cells)
    if (!c.ghost) sets.push_back(c.atom_indices);
  REQUIRE(sets.size() == 3);
  CHECK(sets[0] == range_set(0, 8));    // [0, 0.5)
  CHECK(sets[1] == range_set(8, 12));   // [0.5, 0.75)
  CHECK(sets[2] == range_set(12, 16));  // [0.75, 1)

  CHECK(cell_of(f, 1, Point::on_line(0.6)).atom_indices == range_set(8, 12));
}

TEST_CASE("cover rejects non-covering families") {
  const auto space = unit_space(3);
  Cover cover;
  cover.sets = {range_set(0, 4)};
  CHECK_THROWS_AS(build_from_cover(space, cover, {}, 0), FiltrationError);
}

TEST_CASE("dyadic BFS schedule recovers every dyadic cell") {
  const auto space = unit_space(3);
  Cover cover;
  cover.sets = {range_set(0, 6), range_set(2, 8)};
  const auto basis = dyadic_bfs_basis(space, 3);
  REQUIRE(basis.size() == 14);  // 2 + 4 + 8
  const auto f =
      build_from_cover(space, cover, basis, static_cast<int>(basis.size()));

  // enumeration oracle: every dyadic cell of level d is a union of cells of
  // the filtration sigma-algebra after consuming the level <= d basis sets
  const auto reference = build_dyadic(space, 3);
  for (int d = 1; d <= 3; ++d) {
    const int consumed = (1 << (d + 1)) - 2;
    const auto& part = f.levels[static_cast<std::size_t>(consumed)];
    for (const auto& target : reference.levels[static_cast<std::size_t>(d)].cells) {
      // collect the filtration cells of the atoms of the dyadic cell
      std::set<Eigen::Index> ids;
      for (auto a : target.atom_indices)
        ids.insert(part.atom_to_cell[static_cast<std::size_t>(a)]);
      std::size_t total = 0;
      for (auto id : ids)
        total += part.cells[static_cast<std::size_t>(id)].atom_indices.size();
      CHECK(total == target.atom_indices.size());
    }
  }
}

TEST_CASE("cell_of on dyadic filtrations") {
  const auto space = unit_space(3);
  const auto f = build_dyadic(space, 3);
  const Cell& c = cell_of(f, 2, Point::on_line(0.3));
  CHECK(c.atom_indices == range_set(2, 4));  // [0.25, 0.5)
  const Cell& root = cell_of(f, 0, Point::on_line(0.99));
  CHECK(root.atom_indices.size() == 8);
  CHECK_THROWS_AS(cell_of(f, 4, Point::on_line(0.3)), FiltrationError);
}

TEST_CASE("telescoping null cells") {
  // zero out the measure of two atoms to simulate a vanishing density
  auto space = unit_space(4);
  space.atoms[4].measure = 0.0;
  space.atoms[5].measure = 0.0;
  const auto f = build_dyadic(space, 4);
  // the atoms' level-3 cell has zero measure, so must every finer cell
  for (int n = 3; n <= 4; ++n) {
    CHECK(f.atom_in_null_cell(n, 4));
    CHECK(f.atom_in_null_cell(n, 5));
  }
  CHECK_FALSE(f.atom_in_null_cell(2, 4));  // [0.25,0.5) still has mass
  CHECK(f.null_cells(4).size() == 2);
}
