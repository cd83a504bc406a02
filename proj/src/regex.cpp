#include "qre/regex.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace qre {

// ---------------------------------------------------------------------------
// Construction

Regex Regex::make(Kind kind, SchemaPtr schema, std::optional<Predicate> pred, std::vector<Regex> kids) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->schema = std::move(schema);
  n->pred = std::move(pred);
  std::vector<Predicate> atoms;
  if (n->pred) atoms.push_back(*n->pred);
  for (const auto& k : kids) {
    if (!same_schema(k.schema(), n->schema)) throw SchemaError("regex operands over different schemas");
    atoms.insert(atoms.end(), k.atoms().begin(), k.atoms().end());
    n->size += k.size();
  }
  n->atoms = unique_atoms(std::move(atoms));
  n->kids = std::move(kids);
  return Regex(std::move(n));
}

Regex Regex::epsilon(SchemaPtr schema) {
  if (!schema) throw SchemaError("regex needs a schema");
  return make(Kind::epsilon, std::move(schema), std::nullopt, {});
}

Regex Regex::atom(Predicate p) {
  SchemaPtr s = p.schema();
  return make(Kind::atom, std::move(s), std::move(p), {});
}

Regex unchecked_alt(const Regex& a, const Regex& b) {
  return Regex::make(Regex::Kind::alt, a.schema(), std::nullopt, {a, b});
}

Regex unchecked_cat(const Regex& a, const Regex& b) {
  return Regex::make(Regex::Kind::cat, a.schema(), std::nullopt, {a, b});
}

Regex unchecked_star(const Regex& a) {
  return Regex::make(Regex::Kind::star, a.schema(), std::nullopt, {a});
}

Regex Regex::alt(const Regex& a, const Regex& b) {
  if (!check_disjoint(a, b))
    throw RegexError("union operands are not disjoint: " + a.to_string() + " | " + b.to_string());
  return unchecked_alt(a, b);
}

Regex Regex::cat(const Regex& a, const Regex& b) {
  if (!check_unamb_concat(a, b))
    throw RegexError("concatenation is ambiguous: (" + a.to_string() + ")(" + b.to_string() + ")");
  return unchecked_cat(a, b);
}

Regex Regex::star(const Regex& a) {
  if (!check_unamb_iter(a)) throw RegexError("not unambiguously iterable: " + a.to_string());
  return unchecked_star(a);
}

Regex Regex::power(const Regex& a, std::size_t n) {
  if (n == 0) return epsilon(a.schema());
  if (n == 1) return a;
  // Balanced so the expression depth stays logarithmic.
  return cat(power(a, n / 2), power(a, n - n / 2));
}

const Dfa& Regex::dfa() const {
  std::call_once(node_->dfa_once, [this] {
    node_->dfa = std::make_shared<const Dfa>(compile_automaton(*this));
  });
  return *node_->dfa;
}

std::string Regex::to_string() const {
  switch (kind()) {
    case Kind::epsilon: return "eps";
    case Kind::atom: return "[" + predicate().to_string() + "]";
    case Kind::alt: return "(" + left().to_string() + " + " + right().to_string() + ")";
    case Kind::cat: return left().to_string() + " " + right().to_string();
    case Kind::star: return "(" + inner().to_string() + ")*";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Glushkov automaton + subset construction

namespace {

struct Glushkov {
  std::vector<int> atom_of;  // per position: atom index in the alphabet
  std::vector<std::vector<int>> follow;

  struct Info {
    bool nullable;
    std::vector<int> first, last;
  };

  static void add_all(std::vector<int>& dst, const std::vector<int>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  }

  Info build(const Regex& r, const Minterms& alphabet) {
    switch (r.kind()) {
      case Regex::Kind::epsilon: return {true, {}, {}};
      case Regex::Kind::atom: {
        int idx = alphabet.atom_index(r.predicate());
        if (idx < 0) throw std::logic_error("alphabet lacks an atom of the expression");
        int pos = static_cast<int>(atom_of.size());
        atom_of.push_back(idx);
        follow.emplace_back();
        return {false, {pos}, {pos}};
      }
      case Regex::Kind::alt: {
        Info a = build(r.left(), alphabet), b = build(r.right(), alphabet);
        add_all(a.first, b.first);
        add_all(a.last, b.last);
        a.nullable = a.nullable || b.nullable;
        return a;
      }
      case Regex::Kind::cat: {
        Info a = build(r.left(), alphabet), b = build(r.right(), alphabet);
        for (int p : a.last) add_all(follow[p], b.first);
        Info out{a.nullable && b.nullable, a.first, b.last};
        if (a.nullable) add_all(out.first, b.first);
        if (b.nullable) add_all(out.last, a.last);
        return out;
      }
      case Regex::Kind::star: {
        Info a = build(r.inner(), alphabet);
        for (int p : a.last) add_all(follow[p], a.first);
        a.nullable = true;
        return a;
      }
    }
    return {};
  }
};

void normalize(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

void compute_live(Dfa& d) {
  std::vector<std::vector<std::uint32_t>> rev(d.states);
  for (std::size_t q = 0; q < d.states; ++q)
    for (std::size_t c = 0; c < d.cells(); ++c) rev[d.next(q, c)].push_back(static_cast<std::uint32_t>(q));
  d.live.assign(d.states, 0);
  std::deque<std::size_t> work;
  for (std::size_t q = 0; q < d.states; ++q)
    if (d.accepting[q]) {
      d.live[q] = 1;
      work.push_back(q);
    }
  while (!work.empty()) {
    std::size_t q = work.front();
    work.pop_front();
    for (auto p : rev[q])
      if (!d.live[p]) {
        d.live[p] = 1;
        work.push_back(p);
      }
  }
}

// Moore partition refinement to the minimal complete automaton.
void minimize(Dfa& d) {
  const std::size_t n = d.states, k = d.cells();
  std::vector<std::uint32_t> cls(n);
  for (std::size_t q = 0; q < n; ++q) cls[q] = d.accepting[q] ? 1 : 0;
  std::size_t count = 0;
  for (;;) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> ids;
    std::vector<std::uint32_t> next(n);
    std::vector<std::uint32_t> sig(k + 1);
    for (std::size_t q = 0; q < n; ++q) {
      sig[0] = cls[q];
      for (std::size_t c = 0; c < k; ++c) sig[c + 1] = cls[d.next(q, c)];
      next[q] = ids.emplace(sig, static_cast<std::uint32_t>(ids.size())).first->second;
    }
    bool stable = ids.size() == count;
    count = ids.size();
    cls = std::move(next);
    if (stable) break;
  }
  Dfa m;
  m.alphabet = d.alphabet;
  m.states = count;
  m.initial = cls[d.initial];
  m.delta.assign(count * k, 0);
  m.accepting.assign(count, 0);
  for (std::size_t q = 0; q < n; ++q) {
    m.accepting[cls[q]] = d.accepting[q];
    for (std::size_t c = 0; c < k; ++c) m.delta[cls[q] * k + c] = cls[d.next(q, c)];
  }
  d = std::move(m);
}

}  // namespace

Dfa compile_automaton(const Regex& r) {
  return compile_automaton(r, compute_minterms(r.schema(), r.atoms()));
}

Dfa compile_automaton(const Regex& r, MintermsPtr alphabet) {
  if (!same_schema(r.schema(), alphabet->schema())) throw SchemaError("alphabet over a different schema");
  Glushkov g;
  Glushkov::Info info = g.build(r, *alphabet);
  normalize(info.first);
  normalize(info.last);
  for (auto& f : g.follow) normalize(f);

  const std::size_t ncells = alphabet->size();
  const int start = static_cast<int>(g.atom_of.size());  // pseudo-position
  std::vector<char> is_last(g.atom_of.size() + 1, 0);
  for (int p : info.last) is_last[p] = 1;

  Dfa d;
  d.alphabet = std::move(alphabet);
  std::map<std::vector<int>, std::uint32_t> ids;
  std::vector<std::vector<int>> sets;
  auto intern = [&](std::vector<int> s) {
    auto [it, fresh] = ids.emplace(s, static_cast<std::uint32_t>(sets.size()));
    if (fresh) {
      bool acc = false;
      for (int p : s) acc = acc || (p == start ? info.nullable : is_last[p]);
      d.accepting.push_back(acc);
      sets.push_back(std::move(s));
    }
    return it->second;
  };
  d.initial = intern({start});
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t c = 0; c < ncells; ++c) {
      std::vector<int> target;
      for (int p : sets[i]) {
        const auto& succ = p == start ? info.first : g.follow[p];
        for (int q : succ)
          if (d.alphabet->cell_implies(c, static_cast<std::size_t>(g.atom_of[q]))) target.push_back(q);
      }
      normalize(target);
      std::uint32_t t = intern(std::move(target));
      d.delta.push_back(t);
    }
  }
  d.states = sets.size();
  minimize(d);
  compute_live(d);
  return d;
}

bool Dfa::accepts(std::span<const Item> w) const {
  std::size_t q = initial;
  for (const auto& item : w) {
    q = step(q, item);
    if (!live[q]) return false;
  }
  return accepting[q];
}

MintermsPtr joint_minterms(const Regex& a, const Regex& b) {
  if (!same_schema(a.schema(), b.schema())) throw SchemaError("regexes over different schemas");
  std::vector<Predicate> atoms = a.atoms();
  atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
  return compute_minterms(a.schema(), std::move(atoms));
}

bool re_matches(const Regex& r, std::span<const Item> w) {
  for (const auto& item : w) r.schema()->validate(item);
  return r.dfa().accepts(w);
}

// ---------------------------------------------------------------------------
// Decision procedures

namespace {

struct PairSearch {
  std::size_t width;
  std::vector<char> seen;
  std::deque<std::pair<std::size_t, std::size_t>> work;

  PairSearch(std::size_t n1, std::size_t n2) : width(n2), seen(n1 * n2, 0) {}
  bool visit(std::size_t a, std::size_t b) {
    char& s = seen[a * width + b];
    if (s) return false;
    s = 1;
    work.emplace_back(a, b);
    return true;
  }
};

std::pair<Dfa, Dfa> joint_dfas(const Regex& a, const Regex& b) {
  auto alpha = joint_minterms(a, b);
  return {compile_automaton(a, alpha), compile_automaton(b, alpha)};
}

// Two distinct splits u|xv and ux|v with x nonempty, u,ux in L(a), xv,v in L(b).
bool concat_ambiguous(const Dfa& a, const Dfa& b) {
  const std::size_t ncells = a.cells();

  // Phase 1: every reachable accepting state of `a` can end u.
  std::vector<char> reach(a.states, 0);
  std::deque<std::size_t> work{a.initial};
  reach[a.initial] = 1;
  while (!work.empty()) {
    auto q = work.front();
    work.pop_front();
    for (std::size_t c = 0; c < ncells; ++c) {
      auto t = a.next(q, c);
      if (!reach[t] && a.live[t]) {
        reach[t] = 1;
        work.push_back(t);
      }
    }
  }

  // Phase 2: read x (at least one symbol) in `a` from an accepting state and
  // in `b` from its initial state. Layer 0 is "nothing read yet".
  const std::size_t na = a.states, nb = b.states;
  std::vector<char> seen(2 * na * nb, 0);
  std::deque<std::tuple<std::size_t, std::size_t, int>> pw;
  auto push = [&](std::size_t qa, std::size_t qb, int moved) {
    if (!a.live[qa] || !b.live[qb]) return;
    char& s = seen[(static_cast<std::size_t>(moved) * na + qa) * nb + qb];
    if (!s) {
      s = 1;
      pw.emplace_back(qa, qb, moved);
    }
  };
  for (std::size_t q = 0; q < na; ++q)
    if (reach[q] && a.accepting[q]) push(q, b.initial, 0);
  std::vector<char> mid(nb, 0);
  while (!pw.empty()) {
    auto [qa, qb, moved] = pw.front();
    pw.pop_front();
    if (moved && a.accepting[qa]) mid[qb] = 1;
    for (std::size_t c = 0; c < ncells; ++c) push(a.next(qa, c), b.next(qb, c), 1);
  }

  // Phase 3: read v in two copies of `b`, one continuing xv and one fresh.
  PairSearch ps(nb, nb);
  for (std::size_t q = 0; q < nb; ++q)
    if (mid[q] && b.live[b.initial]) ps.visit(q, b.initial);
  while (!ps.work.empty()) {
    auto [p, q] = ps.work.front();
    ps.work.pop_front();
    if (b.accepting[p] && b.accepting[q]) return true;
    for (std::size_t c = 0; c < ncells; ++c) {
      auto np = b.next(p, c), nq = b.next(q, c);
      if (b.live[np] && b.live[nq]) ps.visit(np, nq);
    }
  }
  return false;
}

}  // namespace

bool check_disjoint(const Regex& a, const Regex& b) {
  auto [da, db] = joint_dfas(a, b);
  PairSearch ps(da.states, db.states);
  ps.visit(da.initial, db.initial);
  while (!ps.work.empty()) {
    auto [p, q] = ps.work.front();
    ps.work.pop_front();
    if (da.accepting[p] && db.accepting[q]) return false;
    for (std::size_t c = 0; c < da.cells(); ++c) {
      auto np = da.next(p, c), nq = db.next(q, c);
      if (da.live[np] && db.live[nq]) ps.visit(np, nq);
    }
  }
  return true;
}

bool check_equivalent(const Regex& a, const Regex& b) {
  auto [da, db] = joint_dfas(a, b);
  PairSearch ps(da.states, db.states);
  ps.visit(da.initial, db.initial);
  while (!ps.work.empty()) {
    auto [p, q] = ps.work.front();
    ps.work.pop_front();
    if (da.accepting[p] != db.accepting[q]) return false;
    for (std::size_t c = 0; c < da.cells(); ++c) ps.visit(da.next(p, c), db.next(q, c));
  }
  return true;
}

bool check_unamb_concat(const Regex& a, const Regex& b) {
  auto [da, db] = joint_dfas(a, b);
  return !concat_ambiguous(da, db);
}

bool is_empty_language(const Regex& r) { return !r.dfa().live[r.dfa().initial]; }

bool accepts_epsilon(const Regex& r) { return r.dfa().accepting[r.dfa().initial]; }

bool check_unamb_iter(const Regex& r) {
  if (is_empty_language(r) || accepts_epsilon(r)) return false;
  // With epsilon excluded, L* factors uniquely iff L . L* splits uniquely:
  // two factorizations either differ in the first block or in the remainder.
  const Dfa& d = r.dfa();
  Dfa ds = compile_automaton(unchecked_star(r), d.alphabet);
  return !concat_ambiguous(d, ds);
}

namespace detail {

std::optional<std::size_t> split_point(const Regex& a, const Regex& b, std::span<const Item> w) {
  const Dfa& da = a.dfa();
  const Dfa& db = b.dfa();
  const std::size_t n = w.size();
  std::size_t q = da.initial;
  for (std::size_t k = 0; k <= n; ++k) {
    if (da.accepting[q] && db.accepts(w.subspan(k))) return k;
    if (k == n) break;
    q = da.step(q, w[k]);
    if (!da.live[q]) break;
  }
  return std::nullopt;
}

std::optional<std::vector<Block>> factorize(const Regex& r, std::span<const Item> w) {
  const Dfa& d = r.dfa();
  const std::size_t n = w.size();
  // reach[k]: w[0,k) factors into blocks; from[k]: start of the last block.
  std::vector<char> reach(n + 1, 0);
  std::vector<std::size_t> from(n + 1, 0);
  reach[0] = 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (!reach[j]) continue;
    std::size_t q = d.initial;
    for (std::size_t k = j; k < n; ++k) {
      q = d.step(q, w[k]);
      if (!d.live[q]) break;
      if (d.accepting[q] && !reach[k + 1]) {
        reach[k + 1] = 1;
        from[k + 1] = j;
      }
    }
  }
  if (!reach[n]) return std::nullopt;
  std::vector<Block> blocks;
  for (std::size_t k = n; k > 0; k = from[k]) blocks.emplace_back(from[k], k);
  std::reverse(blocks.begin(), blocks.end());
  return blocks;
}

}  // namespace detail

std::optional<std::size_t> unique_split(const Regex& a, const Regex& b, std::span<const Item> w) {
  if (!check_unamb_concat(a, b)) throw RegexError("unique_split: operands are not unambiguously concatenable");
  for (const auto& item : w) a.schema()->validate(item);
  return detail::split_point(a, b, w);
}

std::optional<std::vector<Block>> unique_factorization(const Regex& r, std::span<const Item> w) {
  if (!check_unamb_iter(r)) throw RegexError("unique_factorization: operand is not unambiguously iterable");
  for (const auto& item : w) r.schema()->validate(item);
  return detail::factorize(r, w);
}

}  // namespace qre
