#include "flowlatin/eval.hpp"

#include <cmath>
#include <limits>

#include "flowlatin/error.hpp"
#include "flowlatin/exact_sum.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::eval {

using script::BinaryOp;
using script::Builtin;

struct BoundExpr::Node {
  enum class Kind { Field, Member, Const, Binary, Call } kind;
  std::size_t index = 0;
  std::size_t member = 0;
  Value value;
  BinaryOp op = BinaryOp::Add;
  Builtin fn = Builtin::Count;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const BoundExpr::Node>;

NodePtr bind(const script::Expr& expr, const data::Schema& input) {
  auto node = std::make_shared<BoundExpr::Node>();
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, script::FieldRef>) {
          node->index = script::resolve_field(input, x.name);
          node->kind = BoundExpr::Node::Kind::Field;
          if (x.member) {
            const auto& type = input.fields[node->index].type;
            if (type.kind != data::TypeKind::Bag || !type.inner) {
              throw TypeError("'" + x.name + "' is not a bag");
            }
            node->kind = BoundExpr::Node::Kind::Member;
            node->member = script::resolve_field(*type.inner, *x.member);
          }
        } else if constexpr (std::is_same_v<T, script::Const>) {
          node->kind = BoundExpr::Node::Kind::Const;
          node->value = x.value;
        } else if constexpr (std::is_same_v<T, script::Binary>) {
          node->kind = BoundExpr::Node::Kind::Binary;
          node->op = x.op;
          node->args = {bind(*x.lhs, input), bind(*x.rhs, input)};
        } else {
          node->kind = BoundExpr::Node::Kind::Call;
          node->fn = x.fn;
          for (const auto& a : x.args) node->args.push_back(bind(*a, input));
        }
      },
      expr.node);
  return node;
}

Value eval_node(const BoundExpr::Node& n, const Tuple& row) {
  using Kind = BoundExpr::Node::Kind;
  switch (n.kind) {
    case Kind::Field:
      if (n.index >= row.size()) throw EvalError("row too short for field reference");
      return row[n.index];
    case Kind::Member: {
      if (n.index >= row.size()) throw EvalError("row too short for field reference");
      data::Bag out;
      for (const auto& t : row[n.index].as_bag().tuples) out.tuples.push_back(Tuple{t.at(n.member)});
      return out;
    }
    case Kind::Const: return n.value;
    case Kind::Binary: {
      Value lhs = eval_node(*n.args[0], row);
      if (n.op == BinaryOp::And) {
        if (!truthy(lhs)) return Value(0);
        return Value(truthy(eval_node(*n.args[1], row)) ? 1 : 0);
      }
      if (n.op == BinaryOp::Or) {
        if (truthy(lhs)) return Value(1);
        return Value(truthy(eval_node(*n.args[1], row)) ? 1 : 0);
      }
      return apply_binary(n.op, lhs, eval_node(*n.args[1], row));
    }
    case Kind::Call: {
      Value arg = eval_node(*n.args.at(0), row);
      if (n.fn == Builtin::Tokenize) return tokenize(arg.as_text());
      if (n.fn == Builtin::Flatten) throw EvalError("FLATTEN outside a GENERATE list");
      return aggregate_bag(n.fn, arg.as_bag());
    }
  }
  throw EvalError("corrupt expression");
}

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

}  // namespace

BoundExpr::BoundExpr(const script::Expr& expr, const data::Schema& input) : root_(bind(expr, input)) {}

Value BoundExpr::evaluate(const Tuple& row) const { return eval_node(*root_, row); }

bool truthy(const Value& v) {
  switch (v.kind()) {
    case data::ValueKind::Int: return v.as_int() != 0;
    case data::ValueKind::Float: return v.as_float() != 0.0;
    default: throw EvalError("non-numeric value used as a condition");
  }
}

Value apply_binary(BinaryOp op, const Value& lhs, const Value& rhs) {
  switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
    case BinaryOp::Div: {
      if (!lhs.is_numeric() || !rhs.is_numeric()) throw EvalError("arithmetic on non-numeric value");
      if (lhs.kind() == data::ValueKind::Int && rhs.kind() == data::ValueKind::Int) {
        auto a = lhs.as_int();
        auto b = rhs.as_int();
        switch (op) {
          case BinaryOp::Add: return wrap_add(a, b);
          case BinaryOp::Sub: return wrap_sub(a, b);
          case BinaryOp::Mul: return wrap_mul(a, b);
          default:
            if (b == 0) throw EvalError("integer division by zero");
            if (b == -1) return wrap_sub(0, a);
            return a / b;
        }
      }
      double a = lhs.as_number();
      double b = rhs.as_number();
      switch (op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        default: return a / b;
      }
    }
    case BinaryOp::And: return Value(truthy(lhs) && truthy(rhs) ? 1 : 0);
    case BinaryOp::Or: return Value(truthy(lhs) || truthy(rhs) ? 1 : 0);
    default: break;
  }
  // NaN compares unequal to everything, itself included.
  if ((lhs.kind() == data::ValueKind::Float && std::isnan(lhs.as_float())) ||
      (rhs.kind() == data::ValueKind::Float && std::isnan(rhs.as_float()))) {
    return Value(op == BinaryOp::Ne ? 1 : 0);
  }
  auto c = data::compare(lhs, rhs);
  bool r = false;
  switch (op) {
    case BinaryOp::Eq: r = c == 0; break;
    case BinaryOp::Ne: r = c != 0; break;
    case BinaryOp::Lt: r = c < 0; break;
    case BinaryOp::Le: r = c <= 0; break;
    case BinaryOp::Gt: r = c > 0; break;
    default: r = c >= 0; break;
  }
  return Value(r ? 1 : 0);
}

data::Bag tokenize(std::string_view s) {
  data::Bag bag;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !text::is_space(s[j])) ++j;
    if (j > i) bag.tuples.push_back(Tuple{Value(std::string(s.substr(i, j - i)))});
    i = j;
  }
  return bag;
}

Generator::Generator(const std::vector<script::GenerateItem>& items, const data::Schema& input) {
  for (const auto& item : items) {
    const auto* call = std::get_if<script::Call>(&item.expr->node);
    if (call && call->fn == Builtin::Flatten) {
      items_.push_back({BoundExpr(*call->args.at(0), input), true});
    } else {
      items_.push_back({BoundExpr(*item.expr, input), false});
    }
  }
}

void Generator::generate(const Tuple& row, std::vector<Tuple>& out) const {
  std::vector<Value> values;
  values.reserve(items_.size());
  bool any_flatten = false;
  for (const auto& item : items_) {
    values.push_back(item.expr.evaluate(row));
    any_flatten = any_flatten || item.flatten;
  }
  if (!any_flatten) {
    out.push_back(std::move(values));
    return;
  }
  // Odometer over the flattened bags, leftmost item varying slowest.
  std::vector<std::size_t> flat;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!items_[i].flatten) continue;
    if (values[i].as_bag().tuples.empty()) return;
    flat.push_back(i);
  }
  std::vector<std::size_t> pos(items_.size(), 0);
  while (true) {
    Tuple t;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].flatten) {
        const auto& inner = values[i].as_bag().tuples[pos[i]];
        t.insert(t.end(), inner.begin(), inner.end());
      } else {
        t.push_back(values[i]);
      }
    }
    out.push_back(std::move(t));
    std::size_t k = flat.size();
    while (k > 0) {
      std::size_t i = flat[--k];
      if (++pos[i] < values[i].as_bag().tuples.size()) break;
      pos[i] = 0;
      if (k == 0) return;
    }
  }
}

// --- aggregates ------------------------------------------------------------

namespace {

Value partials_value(const ExactSum& s) {
  Tuple t;
  for (double p : s.partials()) t.emplace_back(p);
  return t;
}

ExactSum partials_of(const Value& v) {
  if (v.kind() == data::ValueKind::Int) {
    ExactSum s;
    s.add(static_cast<double>(v.as_int()));
    return s;
  }
  std::vector<double> ps;
  for (const auto& p : v.as_tuple()) ps.push_back(p.as_float());
  return ExactSum::from_partials(ps);
}

// Picks between equivalent extremes independently of merge order: -0.0 wins
// for MIN, +0.0 for MAX.
Value pick(Builtin fn, const Value& a, const Value& b) {
  auto c = data::compare(a, b);
  if (c == 0 && a.kind() == data::ValueKind::Float && b.kind() == data::ValueKind::Float) {
    bool a_neg = std::signbit(a.as_float());
    bool want_neg = fn == Builtin::Min;
    return a_neg == want_neg ? a : b;
  }
  if (fn == Builtin::Min) return c <= 0 ? a : b;
  return c >= 0 ? a : b;
}

const Value& element_of(const Tuple& t) {
  if (t.size() != 1) throw EvalError("aggregate over a multi-field bag");
  return t[0];
}

}  // namespace

Value aggregate_init(Builtin fn, const Value& element) {
  switch (fn) {
    case Builtin::Count: return Value(1);
    case Builtin::Sum:
      if (element.kind() == data::ValueKind::Int) return element;
      if (element.kind() != data::ValueKind::Float) throw EvalError("SUM of non-numeric value");
      {
        ExactSum s;
        s.add(element.as_float());
        return partials_value(s);
      }
    case Builtin::Min:
    case Builtin::Max: return element;
    case Builtin::Avg: {
      if (!element.is_numeric()) throw EvalError("AVG of non-numeric value");
      ExactSum s;
      s.add(element.as_number());
      return Tuple{partials_value(s), Value(1)};
    }
    default: throw EvalError("not an aggregate");
  }
}

Value aggregate_merge(Builtin fn, const Value& a, const Value& b) {
  switch (fn) {
    case Builtin::Count: return wrap_add(a.as_int(), b.as_int());
    case Builtin::Sum: {
      if (a.kind() == data::ValueKind::Int && b.kind() == data::ValueKind::Int) {
        return wrap_add(a.as_int(), b.as_int());
      }
      auto s = partials_of(a);
      s.merge(partials_of(b));
      return partials_value(s);
    }
    case Builtin::Min:
    case Builtin::Max: return pick(fn, a, b);
    case Builtin::Avg: {
      auto s = partials_of(a.as_tuple().at(0));
      s.merge(partials_of(b.as_tuple().at(0)));
      return Tuple{partials_value(s), Value(a.as_tuple().at(1).as_int() + b.as_tuple().at(1).as_int())};
    }
    default: throw EvalError("not an aggregate");
  }
}

Value aggregate_final(Builtin fn, const Value& partial) {
  switch (fn) {
    case Builtin::Sum:
      if (partial.kind() == data::ValueKind::Int) return partial;
      return partials_of(partial).value();
    case Builtin::Avg: {
      double sum = partials_of(partial.as_tuple().at(0)).value();
      return sum / static_cast<double>(partial.as_tuple().at(1).as_int());
    }
    default: return partial;
  }
}

Value aggregate_bag(Builtin fn, const data::Bag& bag) {
  if (fn == Builtin::Count) return static_cast<std::int64_t>(bag.tuples.size());
  if (bag.tuples.empty()) {
    if (fn == Builtin::Sum) return Value(0);
    throw EvalError(std::string(script::builtin_name(fn)) + " of an empty bag");
  }
  Value state = aggregate_init(fn, element_of(bag.tuples[0]));
  for (std::size_t i = 1; i < bag.tuples.size(); ++i) {
    state = aggregate_merge(fn, state, aggregate_init(fn, element_of(bag.tuples[i])));
  }
  return aggregate_final(fn, state);
}

}  // namespace flowlatin::eval
