#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qre/minterms.hpp"
#include "qre/predicate.hpp"

namespace qre {

/// Raised when a union/concatenation/star would not be unambiguous, or when a
/// decision-procedure precondition does not hold.
class RegexError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Dfa;

/// Symbolic unambiguous regular expression.
///
/// The public constructors check the unambiguity side conditions eagerly, so
/// every Regex value denotes a well-formed expression: unions are disjoint,
/// concatenations split uniquely and stars factor uniquely.
class Regex {
 public:
  enum class Kind { epsilon, atom, alt, cat, star };

  static Regex epsilon(SchemaPtr schema);
  static Regex atom(Predicate p);
  static Regex alt(const Regex& a, const Regex& b);
  static Regex cat(const Regex& a, const Regex& b);
  static Regex star(const Regex& a);

  /// Convenience: `a` repeated `n` times (epsilon when n = 0).
  static Regex power(const Regex& a, std::size_t n);

  Kind kind() const { return node_->kind; }
  const SchemaPtr& schema() const { return node_->schema; }
  const Predicate& predicate() const { return *node_->pred; }
  const Regex& left() const { return node_->kids.at(0); }
  const Regex& right() const { return node_->kids.at(1); }
  const Regex& inner() const { return node_->kids.at(0); }

  /// Distinct atomic predicates, in first-occurrence order.
  const std::vector<Predicate>& atoms() const { return node_->atoms; }
  std::size_t size() const { return node_->size; }

  /// Deterministic automaton over this expression's own minterms (cached).
  const Dfa& dfa() const;

  std::string to_string() const;

  /// Same underlying node (cheap sufficient test for equivalence).
  bool identical(const Regex& o) const { return node_ == o.node_; }

 private:
  struct Node {
    Kind kind;
    SchemaPtr schema;
    std::optional<Predicate> pred;
    std::vector<Regex> kids;
    std::vector<Predicate> atoms;
    std::size_t size = 1;
    mutable std::once_flag dfa_once;
    mutable std::shared_ptr<const Dfa> dfa;
  };
  explicit Regex(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Regex make(Kind kind, SchemaPtr schema, std::optional<Predicate> pred, std::vector<Regex> kids);

  friend Regex unchecked_alt(const Regex&, const Regex&);
  friend Regex unchecked_cat(const Regex&, const Regex&);
  friend Regex unchecked_star(const Regex&);

  std::shared_ptr<const Node> node_;
};

/// Structural builders that skip the unambiguity checks. Only for automaton
/// constructions and test oracles; the results may be ambiguous.
Regex unchecked_alt(const Regex& a, const Regex& b);
Regex unchecked_cat(const Regex& a, const Regex& b);
Regex unchecked_star(const Regex& a);

/// Complete deterministic automaton over a minterm alphabet.
struct Dfa {
  MintermsPtr alphabet;
  std::size_t states = 0;
  std::size_t initial = 0;
  std::vector<std::uint32_t> delta;  // states x cells, row-major
  std::vector<char> accepting;
  std::vector<char> live;  // some accepting state is reachable

  std::size_t cells() const { return alphabet->size(); }
  std::size_t next(std::size_t q, std::size_t cell) const { return delta[q * cells() + cell]; }
  std::size_t step(std::size_t q, std::span<const double> item) const {
    return next(q, alphabet->classify(item));
  }
  bool accepts(std::span<const Item> w) const;
};

Dfa compile_automaton(const Regex& r);
/// Automaton over a given alphabet, which must contain every atom of `r`.
Dfa compile_automaton(const Regex& r, MintermsPtr alphabet);

MintermsPtr joint_minterms(const Regex& a, const Regex& b);

bool re_matches(const Regex& r, std::span<const Item> w);

bool check_disjoint(const Regex& a, const Regex& b);
bool check_equivalent(const Regex& a, const Regex& b);
bool check_unamb_concat(const Regex& a, const Regex& b);
bool check_unamb_iter(const Regex& r);
bool is_empty_language(const Regex& r);
bool accepts_epsilon(const Regex& r);

/// Split index k with w[0,k) in a and w[k,n) in b, if any.
/// Throws RegexError unless check_unamb_concat(a, b).
std::optional<std::size_t> unique_split(const Regex& a, const Regex& b, std::span<const Item> w);

using Block = std::pair<std::size_t, std::size_t>;  // half-open [first, second)

/// Blocks of the unique factorization of w over r*, if w is in r*.
/// Throws RegexError unless check_unamb_iter(r).
std::optional<std::vector<Block>> unique_factorization(const Regex& r, std::span<const Item> w);

namespace detail {
// Same as the public versions without re-checking unambiguity.
std::optional<std::size_t> split_point(const Regex& a, const Regex& b, std::span<const Item> w);
std::optional<std::vector<Block>> factorize(const Regex& r, std::span<const Item> w);
}  // namespace detail

}  // namespace qre
