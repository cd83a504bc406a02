#include "qre/minterms.hpp"

#include <set>
#include <stdexcept>

namespace qre {

namespace {

std::vector<Box> conjoin(const Schema& s, const std::vector<Box>& a, const std::vector<Box>& b) {
  std::vector<Box> out;
  for (const auto& x : a)
    for (const auto& y : b)
      if (auto z = x.intersect(s, y)) out.push_back(std::move(*z));
  return out;
}

}  // namespace

std::vector<Predicate> unique_atoms(std::vector<Predicate> atoms) {
  std::vector<Predicate> out;
  std::set<std::string> seen;
  for (auto& a : atoms)
    if (seen.insert(a.key()).second) out.push_back(std::move(a));
  return out;
}

Minterms::Minterms(SchemaPtr schema, std::vector<Predicate> atoms)
    : schema_(std::move(schema)), atoms_(unique_atoms(std::move(atoms))) {
  if (!schema_) throw SchemaError("minterms need a schema");
  if (atoms_.size() > kMaxAtoms) throw std::length_error("too many distinct atomic predicates");
  const Schema& s = *schema_;
  for (const auto& a : atoms_)
    if (!same_schema(a.schema(), schema_)) throw SchemaError("atom over a different schema");

  // Refine the partition one atom at a time; unsatisfiable halves are dropped
  // immediately so the cell count tracks the satisfiable cells only.
  std::vector<Cell> cells{Cell{0, {Box::full(s)}, {}}};
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    auto pos = atoms_[k].dnf();
    auto neg = atoms_[k].dnf_negated();
    std::vector<Cell> next;
    next.reserve(cells.size() * 2);
    for (const auto& c : cells) {
      auto with = conjoin(s, c.region, pos);
      if (!with.empty()) next.push_back(Cell{c.signs | (std::uint64_t{1} << k), std::move(with), {}});
      auto without = conjoin(s, c.region, neg);
      if (!without.empty()) next.push_back(Cell{c.signs, std::move(without), {}});
    }
    cells = std::move(next);
  }
  for (auto& c : cells) {
    c.witness = c.region.front().witness(s);
    by_signs_.emplace(c.signs, cells_.size());
    cells_.push_back(std::move(c));
  }
}

int Minterms::atom_index(const Predicate& p) const {
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if (atoms_[i].key() == p.key()) return static_cast<int>(i);
  return -1;
}

std::size_t Minterms::classify(std::span<const double> item) const {
  std::uint64_t signs = 0;
  for (std::size_t k = 0; k < atoms_.size(); ++k)
    if (atoms_[k].eval(item)) signs |= std::uint64_t{1} << k;
  auto it = by_signs_.find(signs);
  if (it == by_signs_.end()) throw std::logic_error("item falls in no satisfiable minterm");
  return it->second;
}

MintermsPtr compute_minterms(SchemaPtr schema, std::vector<Predicate> atoms) {
  return std::make_shared<const Minterms>(std::move(schema), std::move(atoms));
}

}  // namespace qre
