#include "martrace/filtration.hpp"

#include <algorithm>

namespace martrace {

std::vector<Eigen::Index> Filtration::null_cells(int level) const {
  std::vector<Eigen::Index> out;
  for (const auto& c : levels[static_cast<std::size_t>(level)].cells)
    if (c.measure <= 0.0) out.push_back(c.id);
  return out;
}

namespace {

double atoms_measure(const MeasureSpace& space, const std::vector<Eigen::Index>& idx) {
  double m = 0.0;
  for (auto i : idx) m += space.atoms[static_cast<std::size_t>(i)].measure;
  return m;
}

Partition finish_partition(const MeasureSpace& space, std::vector<Cell> cells) {
  Partition part;
  part.atom_to_cell.assign(static_cast<std::size_t>(space.atom_count()), -1);
  for (auto& c : cells) {
    c.id = static_cast<Eigen::Index>(&c - cells.data());
    for (auto a : c.atom_indices) part.atom_to_cell[static_cast<std::size_t>(a)] = c.id;
  }
  part.cells = std::move(cells);
  return part;
}

}  // namespace

Filtration build_dyadic(const MeasureSpace& space, int depth) {
  if (depth < 0 || depth > space.atom_level)
    throw FiltrationError("filtration depth exceeds atom_level");

  const Eigen::Index n_axis = space.atoms_per_axis();
  const bool two_d = is_two_dimensional(space.kind);

  Filtration f;
  f.space = &space;
  f.mode = FiltrationMode::Dyadic;
  f.levels.reserve(static_cast<std::size_t>(depth) + 1);

  for (int lvl = 0; lvl <= depth; ++lvl) {
    const Eigen::Index cells_axis = Eigen::Index{1} << lvl;
    const Eigen::Index per = n_axis / cells_axis;
    std::vector<Cell> cells;
    if (two_d) {
      cells.reserve(static_cast<std::size_t>(cells_axis * cells_axis));
      for (Eigen::Index cx = 0; cx < cells_axis; ++cx)
        for (Eigen::Index cy = 0; cy < cells_axis; ++cy) {
          Cell c;
          c.level = lvl;
          for (Eigen::Index ix = cx * per; ix < (cx + 1) * per; ++ix)
            for (Eigen::Index iy = cy * per; iy < (cy + 1) * per; ++iy)
              c.atom_indices.push_back(ix * n_axis + iy);
          std::sort(c.atom_indices.begin(), c.atom_indices.end());
          c.measure = atoms_measure(space, c.atom_indices);
          cells.push_back(std::move(c));
        }
    } else {
      cells.reserve(static_cast<std::size_t>(cells_axis));
      for (Eigen::Index u = 0; u < cells_axis; ++u) {
        Cell c;
        c.level = lvl;
        for (Eigen::Index a = u * per; a < (u + 1) * per; ++a) c.atom_indices.push_back(a);
        c.measure = atoms_measure(space, c.atom_indices);
        cells.push_back(std::move(c));
      }
    }
    f.levels.push_back(finish_partition(space, std::move(cells)));
  }
  return f;
}

Filtration build_from_cover(const MeasureSpace& space, const Cover& cover,
                            const std::vector<AtomSet>& basis_schedule, int depth) {
  if (depth < 0) throw FiltrationError("negative depth");
  if (static_cast<std::size_t>(depth) > basis_schedule.size())
    throw FiltrationError("basis schedule shorter than requested depth");

  auto validate = [&](const AtomSet& s) {
    for (auto a : s)
      if (a < 0 || a >= space.atom_count())
        throw FiltrationError("set references an atom outside the space");
    if (!std::is_sorted(s.begin(), s.end()))
      throw FiltrationError("atom sets must be sorted");
  };
  for (const auto& s : cover.sets) validate(s);
  for (const auto& s : basis_schedule) validate(s);

  Filtration f;
  f.space = &space;
  f.mode = FiltrationMode::CoverBased;

  // P_0: the set-difference chain over the cover order.
  std::vector<char> taken(static_cast<std::size_t>(space.atom_count()), 0);
  std::vector<Cell> base;
  for (const auto& s : cover.sets) {
    Cell c;
    c.level = 0;
    for (auto a : s)
      if (!taken[static_cast<std::size_t>(a)]) {
        taken[static_cast<std::size_t>(a)] = 1;
        c.atom_indices.push_back(a);
      }
    if (!c.atom_indices.empty()) {
      c.measure = atoms_measure(space, c.atom_indices);
      base.push_back(std::move(c));
    }
    // frontier of the cover set: no atoms under the half-open convention
    Cell ghost;
    ghost.level = 0;
    ghost.measure = 0.0;
    ghost.ghost = true;
    base.push_back(std::move(ghost));
  }
  if (std::find(taken.begin(), taken.end(), 0) != taken.end())
    throw FiltrationError("cover does not cover the space");
  f.levels.push_back(finish_partition(space, std::move(base)));

  for (int lvl = 1; lvl <= depth; ++lvl) {
    const AtomSet& b = basis_schedule[static_cast<std::size_t>(lvl - 1)];
    std::vector<char> in_b(static_cast<std::size_t>(space.atom_count()), 0);
    for (auto a : b) in_b[static_cast<std::size_t>(a)] = 1;

    std::vector<Cell> next;
    for (const auto& parent : f.levels.back().cells) {
      if (parent.ghost) {
        Cell g = parent;
        g.level = lvl;
        next.push_back(std::move(g));
        continue;
      }
      Cell inside, outside;
      inside.level = outside.level = lvl;
      for (auto a : parent.atom_indices)
        (in_b[static_cast<std::size_t>(a)] ? inside : outside).atom_indices.push_back(a);
      for (Cell* piece : {&inside, &outside}) {
        if (piece->atom_indices.empty()) continue;
        piece->measure = atoms_measure(space, piece->atom_indices);
        next.push_back(std::move(*piece));
      }
    }
    f.levels.push_back(finish_partition(space, std::move(next)));
  }
  return f;
}

const Cell& cell_of(const Filtration& f, int level, const Point& p) {
  if (level < 0 || level > f.depth()) throw FiltrationError("level out of range");
  return f.cell_of_atom(level, atom_of(*f.space, p));
}

std::vector<AtomSet> dyadic_bfs_basis(const MeasureSpace& space, int max_level) {
  auto reference = build_dyadic(space, max_level);
  std::vector<AtomSet> out;
  for (int lvl = 1; lvl <= max_level; ++lvl)
    for (const auto& c : reference.levels[static_cast<std::size_t>(lvl)].cells)
      out.push_back(c.atom_indices);
  return out;
}

}  // namespace martrace
