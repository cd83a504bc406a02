#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "qre/predicate.hpp"

namespace qre {

/// Partition of the data domain induced by a set of atomic predicates.
///
/// Cell i is a sign assignment to the atoms (bit k set when the cell implies
/// atom k). Only satisfiable cells are kept, each with a witness item.
class Minterms {
 public:
  struct Cell {
    std::uint64_t signs = 0;
    std::vector<Box> region;  // DNF of the cell's conjunction
    Item witness;
  };

  static constexpr std::size_t kMaxAtoms = 64;

  Minterms(SchemaPtr schema, std::vector<Predicate> atoms);

  const SchemaPtr& schema() const { return schema_; }
  const std::vector<Predicate>& atoms() const { return atoms_; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }

  /// Position of `p` among the atoms, or -1.
  int atom_index(const Predicate& p) const;

  bool cell_implies(std::size_t cell, std::size_t atom) const {
    return (cells_[cell].signs >> atom) & 1u;
  }

  /// Cell containing `item`. The item is not schema-checked here.
  std::size_t classify(std::span<const double> item) const;

 private:
  SchemaPtr schema_;
  std::vector<Predicate> atoms_;
  std::vector<Cell> cells_;
  std::unordered_map<std::uint64_t, std::size_t> by_signs_;
};

using MintermsPtr = std::shared_ptr<const Minterms>;

/// Deduplicates atoms by structural key, preserving first-seen order.
std::vector<Predicate> unique_atoms(std::vector<Predicate> atoms);

MintermsPtr compute_minterms(SchemaPtr schema, std::vector<Predicate> atoms);

}  // namespace qre
