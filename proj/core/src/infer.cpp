#include <set>

#include "flowlatin/error.hpp"
#include "flowlatin/script.hpp"

namespace flowlatin::script {

using data::FieldType;
using data::Schema;
using data::TypeKind;

std::size_t resolve_field(const Schema& schema, std::string_view name) {
  if (auto idx = schema.index_of(name)) return *idx;
  std::string_view bare = name;
  if (auto pos = name.rfind("::"); pos != std::string_view::npos) {
    // "S::x" also names an unqualified x that did not collide in a join.
    bare = name.substr(pos + 2);
    if (auto idx = schema.index_of(bare)) return *idx;
  }
  std::optional<std::size_t> found;
  std::string suffix = "::" + std::string(bare);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.fields[i].name;
    if (f.size() > suffix.size() && f.ends_with(suffix)) {
      if (found) throw TypeError("ambiguous field '" + std::string(name) + "'");
      found = i;
    }
  }
  if (!found) {
    throw TypeError("unknown field '" + std::string(name) + "' in (" + schema.to_string() + ")");
  }
  return *found;
}

namespace {

bool comparable(const FieldType& a, const FieldType& b) {
  if (a.is_numeric() && b.is_numeric()) return true;
  return a.kind == TypeKind::CharArray && b.kind == TypeKind::CharArray;
}

const Schema& single_field_bag(const FieldType& t, Builtin fn) {
  if (t.kind != TypeKind::Bag || !t.inner) {
    throw TypeError(std::string(builtin_name(fn)) + " expects a bag argument");
  }
  return *t.inner;
}

}  // namespace

FieldType expr_type(const Expr& expr, const Schema& input, bool group_context) {
  return std::visit(
      [&](const auto& x) -> FieldType {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FieldRef>) {
          const auto& field = input.fields[resolve_field(input, x.name)];
          if (!x.member) return field.type;
          if (field.type.kind != TypeKind::Bag) {
            throw TypeError("'" + x.name + "." + *x.member + "': '" + x.name + "' is not a bag");
          }
          const auto& inner = *field.type.inner;
          const auto& member = inner.fields[resolve_field(inner, *x.member)];
          return FieldType::bag_of(Schema{{data::Field{member.name, member.type}}});
        } else if constexpr (std::is_same_v<T, Const>) {
          switch (x.value.kind()) {
            case data::ValueKind::Int: return FieldType::int_type();
            case data::ValueKind::Float: return FieldType::float_type();
            default: return FieldType::chararray_type();
          }
        } else if constexpr (std::is_same_v<T, Binary>) {
          auto l = expr_type(*x.lhs, input, group_context);
          auto r = expr_type(*x.rhs, input, group_context);
          switch (x.op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
              if (!l.is_numeric() || !r.is_numeric()) {
                throw TypeError("arithmetic '" + std::string(binary_op_text(x.op)) +
                                "' needs numeric operands in " + render_expr(expr));
              }
              return (l.kind == TypeKind::Int && r.kind == TypeKind::Int) ? FieldType::int_type()
                                                                          : FieldType::float_type();
            case BinaryOp::And:
            case BinaryOp::Or:
              if (!l.is_numeric() || !r.is_numeric()) {
                throw TypeError("logical operands must be numeric in " + render_expr(expr));
              }
              return FieldType::int_type();
            default:
              if (!comparable(l, r)) {
                throw TypeError("cannot compare " + l.to_string() + " with " + r.to_string() +
                                " in " + render_expr(expr));
              }
              return FieldType::int_type();
          }
        } else {
          if (x.args.size() != 1) {
            throw TypeError(std::string(builtin_name(x.fn)) + " takes exactly one argument");
          }
          if (x.fn == Builtin::Flatten) {
            throw TypeError("FLATTEN is only allowed as a top-level GENERATE item");
          }
          auto arg = expr_type(*x.args[0], input, group_context);
          if (x.fn == Builtin::Tokenize) {
            if (arg.kind != TypeKind::CharArray) throw TypeError("TOKENIZE expects a chararray");
            return FieldType::bag_of(Schema{{data::Field{"token", FieldType::chararray_type()}}});
          }
          if (!group_context) {
            throw TypeError(std::string(builtin_name(x.fn)) +
                            " is only allowed in a FOREACH over a GROUP");
          }
          const auto& inner = single_field_bag(arg, x.fn);
          if (x.fn == Builtin::Count) return FieldType::int_type();
          if (inner.size() != 1) {
            throw TypeError(std::string(builtin_name(x.fn)) + " expects a single-field bag");
          }
          const auto& elem = inner.fields[0].type;
          switch (x.fn) {
            case Builtin::Sum:
              if (!elem.is_numeric()) throw TypeError("SUM expects numeric values");
              return elem;
            case Builtin::Avg:
              if (!elem.is_numeric()) throw TypeError("AVG expects numeric values");
              return FieldType::float_type();
            default:
              if (!elem.is_scalar()) {
                throw TypeError(std::string(builtin_name(x.fn)) + " expects scalar values");
              }
              return elem;
          }
        }
      },
      expr.node);
}

namespace {

Schema foreach_schema(const ForeachOp& op, const Schema& input, bool group_context) {
  Schema out;
  std::set<std::string> names;
  auto add = [&](std::string name, FieldType type) {
    if (!names.insert(name).second) {
      throw TypeError("duplicate output name '" + name + "' in FOREACH " + op.input);
    }
    out.fields.push_back({std::move(name), std::move(type)});
  };
  for (std::size_t i = 0; i < op.items.size(); ++i) {
    const auto& item = op.items[i];
    if (const auto* call = std::get_if<Call>(&item.expr->node);
        call && call->fn == Builtin::Flatten) {
      if (call->args.size() != 1) throw TypeError("FLATTEN takes exactly one argument");
      auto arg = expr_type(*call->args[0], input, group_context);
      if (arg.kind != TypeKind::Bag) throw TypeError("FLATTEN expects a bag");
      const auto& inner = *arg.inner;
      if (item.alias && inner.size() != 1) {
        throw TypeError("AS on FLATTEN needs a single-field bag");
      }
      for (const auto& f : inner.fields) add(item.alias ? *item.alias : f.name, f.type);
      continue;
    }
    auto type = expr_type(*item.expr, input, group_context);
    std::string name;
    if (item.alias) {
      name = *item.alias;
    } else if (const auto* ref = std::get_if<FieldRef>(&item.expr->node)) {
      name = ref->member ? *ref->member : input.fields[resolve_field(input, ref->name)].name;
    } else {
      name = "$" + std::to_string(i);
    }
    add(std::move(name), std::move(type));
  }
  return out;
}

FieldType key_type(const Schema& input, const std::vector<std::string>& keys) {
  Schema parts;
  for (const auto& k : keys) {
    const auto& f = input.fields[resolve_field(input, k)];
    if (f.type.kind == TypeKind::Bag) throw TypeError("cannot use bag field '" + k + "' as a key");
    parts.fields.push_back(f);
  }
  if (parts.size() == 1) return parts.fields[0].type;
  return FieldType::tuple_of(std::move(parts));
}

}  // namespace

LogicalPlan infer_schemas(LogicalPlan plan) {
  for (auto& node : plan.nodes) {
    auto schema_of = [&](const std::string& alias) -> const Schema& {
      const auto& in = plan.at(alias);
      if (!in.schema) throw TypeError("schema of '" + alias + "' not inferred");
      return *in.schema;
    };
    node.schema = std::visit(
        [&](const auto& op) -> Schema {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, LoadOp>) {
            return op.schema;
          } else if constexpr (std::is_same_v<T, FilterOp>) {
            const auto& in = schema_of(op.input);
            auto t = expr_type(*op.predicate, in, false);
            if (!t.is_numeric()) throw TypeError("FILTER predicate must be numeric/boolean");
            return in;
          } else if constexpr (std::is_same_v<T, ForeachOp>) {
            const auto& in = schema_of(op.input);
            bool grouped = std::holds_alternative<GroupOp>(plan.at(op.input).op);
            return foreach_schema(op, in, grouped);
          } else if constexpr (std::is_same_v<T, GroupOp>) {
            const auto& in = schema_of(op.input);
            Schema out;
            out.fields.push_back({"group", key_type(in, op.keys)});
            out.fields.push_back({op.input, FieldType::bag_of(in)});
            return out;
          } else if constexpr (std::is_same_v<T, JoinOp>) {
            if (op.left == op.right) throw TypeError("self-join needs two distinct aliases");
            const auto& l = schema_of(op.left);
            const auto& r = schema_of(op.right);
            for (std::size_t i = 0; i < op.left_keys.size(); ++i) {
              const auto& lt = l.fields[resolve_field(l, op.left_keys[i])].type;
              const auto& rt = r.fields[resolve_field(r, op.right_keys[i])].type;
              if (!comparable(lt, rt)) {
                throw TypeError("JOIN key types differ: " + lt.to_string() + " vs " +
                                rt.to_string());
              }
            }
            std::set<std::string> lnames, rnames;
            for (const auto& f : l.fields) lnames.insert(f.name);
            for (const auto& f : r.fields) rnames.insert(f.name);
            Schema out;
            for (const auto& f : l.fields) {
              out.fields.push_back(
                  {rnames.count(f.name) ? op.left + "::" + f.name : f.name, f.type});
            }
            for (const auto& f : r.fields) {
              out.fields.push_back(
                  {lnames.count(f.name) ? op.right + "::" + f.name : f.name, f.type});
            }
            std::set<std::string> seen;
            for (const auto& f : out.fields) {
              if (!seen.insert(f.name).second) {
                throw TypeError("JOIN output has duplicate field '" + f.name + "'");
              }
            }
            return out;
          } else if constexpr (std::is_same_v<T, OrderOp>) {
            const auto& in = schema_of(op.input);
            (void)key_type(in, op.keys);
            return in;
          } else {
            return schema_of(op.input);
          }
        },
        node.op);
  }
  return plan;
}

}  // namespace flowlatin::script
