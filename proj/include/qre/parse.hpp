#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "qre/expr.hpp"

namespace qre {

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::invalid_argument(what + " (at offset " + std::to_string(pos) + ")"), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

/// "v:real,n:int,beat:boolean,chamber:enum(0|A|V)"
SchemaPtr parse_schema(std::string_view text);

/// Predicate syntax: `field OP const` with OP in < <= = == != >= >, bare
/// boolean field names, `true`, `false`, `!`, `&`, `|`, parentheses.
Predicate parse_predicate(const SchemaPtr& schema, std::string_view text);

/// Cost-function syntax: numbers, field names, + - * /, unary minus,
/// abs(e), sqr(e), parentheses. Integer literals have no '.' or exponent.
ItemFn parse_item_fn(const SchemaPtr& schema, std::string_view text);

/// Prefix QRE syntax:
///   basic(pred, fn)
///   op(name[c,...], operand, ...)     operand: QRE | $p | $p:type | lit(value)
///                                               | calc(name[c,...], $p:type | lit(v) | calc(...), ...)
///   subst(f, x, g)   else(f, g)   split(name[c,...], f, g)
///   iter(p, f)   iter(p=seed, f)   iterop(name, p[=seed], f)
///   compose(f, g)                     g reads items {x: type of f}
/// `#` starts a comment that runs to the end of the line.
QrePtr parse_qre(const SchemaPtr& schema, std::string_view text);

}  // namespace qre
