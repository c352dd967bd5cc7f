#pragma once

// Runtime evaluation of script expressions against tuples.
//
// Int op Int stays integral (two's-complement wrap, truncating division);
// any float operand switches to IEEE double arithmetic. Comparisons and
// AND/OR yield Int 1 or 0. Float SUM and AVG are exactly rounded, so they
// give the same bits whatever the grouping of partial aggregates.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "flowlatin/schema.hpp"
#include "flowlatin/script.hpp"
#include "flowlatin/value.hpp"

namespace flowlatin::eval {

using data::Tuple;
using data::Value;

/// An expression with field names resolved to positions.
class BoundExpr {
 public:
  BoundExpr(const script::Expr& expr, const data::Schema& input);
  Value evaluate(const Tuple& row) const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
};

Value apply_binary(script::BinaryOp op, const Value& lhs, const Value& rhs);
bool truthy(const Value& v);

/// Whitespace tokenization into a bag of 1-tuples, in input order.
data::Bag tokenize(std::string_view text);

/// A FOREACH ... GENERATE list bound to its input schema. Top-level FLATTEN
/// items expand into one output row per bag element (cross product across
/// several FLATTENs; an empty bag drops the row).
class Generator {
 public:
  Generator(const std::vector<script::GenerateItem>& items, const data::Schema& input);
  void generate(const Tuple& row, std::vector<Tuple>& out) const;

 private:
  struct Item {
    BoundExpr expr;
    bool flatten;
  };
  std::vector<Item> items_;
};

// --- aggregates ------------------------------------------------------------
//
// Partial state per function:
//   COUNT      Int count
//   SUM        Int (wrapping) for ints, Tuple of ExactSum partials for floats
//   MIN / MAX  the current extreme value
//   AVG        Tuple(Tuple of ExactSum partials, Int count)

/// Aggregate over a whole bag; the bag's tuples hold the single argument
/// field (COUNT accepts any bag). Throws EvalError for MIN/MAX/AVG of an
/// empty bag.
Value aggregate_bag(script::Builtin fn, const data::Bag& bag);

/// Partial state for one element. `element` is ignored for COUNT.
Value aggregate_init(script::Builtin fn, const Value& element);
Value aggregate_merge(script::Builtin fn, const Value& a, const Value& b);
Value aggregate_final(script::Builtin fn, const Value& partial);

}  // namespace flowlatin::eval
