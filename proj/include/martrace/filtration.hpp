#pragma once

#include "martrace/space.hpp"

namespace martrace {

// One element of a partition P_n: a union of atoms with its exact measure.
struct Cell {
  Eigen::Index id;
  int level;
  std::vector<Eigen::Index> atom_indices;  // ascending
  double measure;
  bool ghost = false;  // measure-zero frontier piece carrying no atoms
};

struct Partition {
  std::vector<Cell> cells;
  // atom index -> cell id within this level
  std::vector<Eigen::Index> atom_to_cell;
};

enum class FiltrationMode { Dyadic, CoverBased };

// Nested partition sequence P_0, P_1, ..., P_depth of a measure space,
// together with the zero-measure cell bookkeeping.
class Filtration {
 public:
  const MeasureSpace* space = nullptr;
  FiltrationMode mode = FiltrationMode::Dyadic;
  std::vector<Partition> levels;  // levels[n] = P_n

  int depth() const { return static_cast<int>(levels.size()) - 1; }

  const Cell& cell_of_atom(int level, Eigen::Index atom) const {
    const auto& part = levels[static_cast<std::size_t>(level)];
    return part.cells[static_cast<std::size_t>(part.atom_to_cell[static_cast<std::size_t>(atom)])];
  }

  // ids of zero-measure cells at the given level (ghosts included)
  std::vector<Eigen::Index> null_cells(int level) const;

  // true when the atom lies in a zero-measure cell at the given level
  bool atom_in_null_cell(int level, Eigen::Index atom) const {
    return cell_of_atom(level, atom).measure <= 0.0;
  }
};

struct FiltrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid-aligned set, given as a sorted list of atom indices.
using AtomSet = std::vector<Eigen::Index>;

struct Cover {
  std::vector<AtomSet> sets;
};

Filtration build_dyadic(const MeasureSpace& space, int depth);

// Cover-based construction: P_0 is the set-difference chain of the cover,
// each later level splits every cell by the next basis set into its inside
// and outside pieces. One basis set is consumed per level.
Filtration build_from_cover(const MeasureSpace& space, const Cover& cover,
                            const std::vector<AtomSet>& basis_schedule, int depth);

const Cell& cell_of(const Filtration& f, int level, const Point& p);

// All dyadic cells of levels 1..max_level in breadth-first order, as atom
// sets; the basis schedule behind the "dyadic_bfs" config tag.
std::vector<AtomSet> dyadic_bfs_basis(const MeasureSpace& space, int max_level);

}  // namespace martrace
