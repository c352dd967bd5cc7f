#include <algorithm>
#include <cctype>

#include "flowlatin/error.hpp"
#include "flowlatin/script.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::script {

// --- expression helpers ----------------------------------------------------

ExprPtr make_field(std::string name, std::optional<std::string> member) {
  return std::make_shared<const Expr>(Expr{FieldRef{std::move(name), std::move(member)}});
}
ExprPtr make_const(data::Value v) { return std::make_shared<const Expr>(Expr{Const{std::move(v)}}); }
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_call(Builtin fn, std::vector<ExprPtr> args) {
  return std::make_shared<const Expr>(Expr{Call{fn, std::move(args)}});
}

std::string_view binary_op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "AND";
    case BinaryOp::Or: return "OR";
  }
  return "?";
}

std::string_view builtin_name(Builtin fn) {
  switch (fn) {
    case Builtin::Count: return "COUNT";
    case Builtin::Sum: return "SUM";
    case Builtin::Min: return "MIN";
    case Builtin::Max: return "MAX";
    case Builtin::Avg: return "AVG";
    case Builtin::Tokenize: return "TOKENIZE";
    case Builtin::Flatten: return "FLATTEN";
  }
  return "?";
}

bool is_aggregate(Builtin fn) {
  return fn == Builtin::Count || fn == Builtin::Sum || fn == Builtin::Min || fn == Builtin::Max ||
         fn == Builtin::Avg;
}

namespace {

std::optional<Builtin> builtin_from_name(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto fn : {Builtin::Count, Builtin::Sum, Builtin::Min, Builtin::Max, Builtin::Avg,
                  Builtin::Tokenize, Builtin::Flatten}) {
    if (builtin_name(fn) == upper) return fn;
  }
  return std::nullopt;
}

bool same_const(const data::Value& a, const data::Value& b) {
  if (a.kind() != b.kind()) return false;
  if (a.kind() == data::ValueKind::Float) {
    return std::bit_cast<std::uint64_t>(a.as_float()) == std::bit_cast<std::uint64_t>(b.as_float());
  }
  return data::compare(a, b) == 0;
}

std::string quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "'";
}

std::string render_const(const data::Value& v) {
  switch (v.kind()) {
    case data::ValueKind::Int: return std::to_string(v.as_int());
    case data::ValueKind::Float: {
      auto s = text::format_double_exact(v.as_float());
      if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
      return s;
    }
    case data::ValueKind::CharArray: return quote(v.as_text());
    default: return data::debug_string(v);
  }
}

}  // namespace

bool same_expr(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, FieldRef>) {
          return x == y;
        } else if constexpr (std::is_same_v<T, Const>) {
          return same_const(x.value, y.value);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && same_expr(*x.lhs, *y.lhs) && same_expr(*x.rhs, *y.rhs);
        } else {
          if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (!same_expr(*x.args[i], *y.args[i])) return false;
          }
          return true;
        }
      },
      a.node);
}

std::string render_expr(const Expr& e) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FieldRef>) {
          return x.member ? x.name + '.' + *x.member : x.name;
        } else if constexpr (std::is_same_v<T, Const>) {
          return render_const(x.value);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return '(' + render_expr(*x.lhs) + ' ' + std::string(binary_op_text(x.op)) + ' ' +
                 render_expr(*x.rhs) + ')';
        } else {
          std::string out = std::string(builtin_name(x.fn)) + '(';
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (i) out += ", ";
            out += render_expr(*x.args[i]);
          }
          return out + ')';
        }
      },
      e.node);
}

// --- plan helpers ----------------------------------------------------------

std::vector<std::string> op_inputs(const PlanOp& op) {
  return std::visit(
      [](const auto& x) -> std::vector<std::string> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LoadOp>) {
          return {};
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          return {x.left, x.right};
        } else {
          return {x.input};
        }
      },
      op);
}

std::string_view op_name(const PlanOp& op) {
  static constexpr std::string_view kNames[] = {"LOAD",  "FILTER", "FOREACH", "GROUP",
                                                "JOIN",  "ORDER",  "STORE"};
  return kNames[op.index()];
}

const PlanNode& LogicalPlan::at(std::string_view alias) const {
  auto idx = find(alias);
  if (!idx) throw PlanError("undefined alias '" + std::string(alias) + "'");
  return nodes[*idx];
}

std::optional<std::size_t> LogicalPlan::find(std::string_view alias) const {
  auto it = aliases.find(alias);
  if (it == aliases.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> LogicalPlan::inputs_of(std::size_t node) const {
  std::vector<std::size_t> out;
  for (const auto& name : op_inputs(nodes.at(node).op)) out.push_back(aliases.at(name));
  return out;
}

std::size_t LogicalPlan::store_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const PlanNode& n) {
    return std::holds_alternative<StoreOp>(n.op);
  }));
}

// --- parser ----------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, LogicalPlan& plan) : toks_(tokens), plan_(plan) {}

  void script() {
    while (!at_end()) statement();
  }

  void statement() {
    if (check(TokenKind::Store)) {
      advance();
      std::string input = ident("relation name");
      expect(TokenKind::Into, "INTO");
      std::string path = expect(TokenKind::String, "output path").text;
      expect(TokenKind::Semicolon, "';'");
      require_alias(input);
      add_node("", StoreOp{input, path});
      return;
    }
    std::size_t alias_pos = pos_;
    std::string alias = ident("alias or STORE");
    expect(TokenKind::Assign, "'='");
    PlanOp op = operation();
    expect(TokenKind::Semicolon, "';'");
    for (const auto& in : op_inputs(op)) require_alias(in);
    if (plan_.aliases.count(alias)) {
      throw PlanError("alias '" + alias + "' reassigned (line " +
                      std::to_string(toks_[alias_pos].line) + ")");
    }
    add_node(alias, std::move(op));
  }

 private:
  PlanOp operation() {
    if (match(TokenKind::Load)) {
      std::string path = expect(TokenKind::String, "input path").text;
      expect(TokenKind::As, "AS");
      std::size_t open = pos_;
      expect(TokenKind::LParen, "'('");
      std::string schema_text;
      while (!check(TokenKind::RParen)) {
        if (at_end()) fail("unterminated schema");
        const Token& t = advance();
        if (t.kind == TokenKind::Ident) {
          schema_text += t.text;
        } else if (t.kind == TokenKind::Colon) {
          schema_text += ':';
        } else if (t.kind == TokenKind::Comma) {
          schema_text += ',';
        } else {
          fail_at(pos_ - 1, "unexpected " + describe(t) + " in schema");
        }
      }
      advance();
      try {
        return LoadOp{path, data::parse_schema(schema_text), LoadFormat::Text};
      } catch (const SchemaError& e) {
        fail_at(open, e.what());
      }
    }
    if (match(TokenKind::Filter)) {
      std::string input = ident("relation name");
      expect(TokenKind::By, "BY");
      return FilterOp{input, expr()};
    }
    if (match(TokenKind::Foreach)) {
      std::string input = ident("relation name");
      expect(TokenKind::Generate, "GENERATE");
      ForeachOp op{input, {}};
      do {
        GenerateItem item{expr(), std::nullopt};
        if (match(TokenKind::As)) item.alias = ident("output name");
        op.items.push_back(std::move(item));
      } while (match(TokenKind::Comma));
      return op;
    }
    if (match(TokenKind::Group)) {
      std::string input = ident("relation name");
      expect(TokenKind::By, "BY");
      return GroupOp{input, field_list()};
    }
    if (match(TokenKind::Join)) {
      JoinOp op;
      op.left = ident("relation name");
      expect(TokenKind::By, "BY");
      op.left_keys = field_list();
      expect(TokenKind::Comma, "','");
      op.right = ident("relation name");
      expect(TokenKind::By, "BY");
      op.right_keys = field_list();
      if (op.left_keys.size() != op.right_keys.size()) {
        fail("JOIN key lists differ in length");
      }
      return op;
    }
    if (match(TokenKind::Order)) {
      OrderOp op;
      op.input = ident("relation name");
      expect(TokenKind::By, "BY");
      op.keys = field_list();
      op.descending = match(TokenKind::Desc);
      return op;
    }
    fail("expected LOAD, FILTER, FOREACH, GROUP, JOIN or ORDER");
  }

  std::vector<std::string> field_list() {
    std::vector<std::string> out;
    if (match(TokenKind::LParen)) {
      do {
        out.push_back(field_name());
      } while (match(TokenKind::Comma));
      expect(TokenKind::RParen, "')'");
    } else {
      out.push_back(field_name());
    }
    return out;
  }

  std::string field_name() {
    if (match(TokenKind::Group)) return "group";
    std::string name = ident("field name");
    if (match(TokenKind::DoubleColon)) name += "::" + ident("field name");
    return name;
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    auto lhs = and_expr();
    while (match(TokenKind::Or)) lhs = make_binary(BinaryOp::Or, lhs, and_expr());
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = comparison();
    while (match(TokenKind::And)) lhs = make_binary(BinaryOp::And, lhs, comparison());
    return lhs;
  }

  ExprPtr comparison() {
    auto lhs = additive();
    static constexpr std::pair<TokenKind, BinaryOp> kOps[] = {
        {TokenKind::EqEq, BinaryOp::Eq}, {TokenKind::NotEq, BinaryOp::Ne},
        {TokenKind::Lt, BinaryOp::Lt},   {TokenKind::Le, BinaryOp::Le},
        {TokenKind::Gt, BinaryOp::Gt},   {TokenKind::Ge, BinaryOp::Ge}};
    for (auto [kind, op] : kOps) {
      if (match(kind)) return make_binary(op, lhs, additive());
    }
    return lhs;
  }

  ExprPtr additive() {
    auto lhs = multiplicative();
    while (true) {
      if (match(TokenKind::Plus)) {
        lhs = make_binary(BinaryOp::Add, lhs, multiplicative());
      } else if (match(TokenKind::Minus)) {
        lhs = make_binary(BinaryOp::Sub, lhs, multiplicative());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr multiplicative() {
    auto lhs = unary();
    while (true) {
      if (match(TokenKind::Star)) {
        lhs = make_binary(BinaryOp::Mul, lhs, unary());
      } else if (match(TokenKind::Slash)) {
        lhs = make_binary(BinaryOp::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr unary() {
    if (match(TokenKind::Minus)) {
      if (check(TokenKind::Integer)) return integer_literal(true);
      if (check(TokenKind::Float)) return float_literal(true);
      return make_binary(BinaryOp::Sub, make_const(data::Value(std::int64_t{0})), unary());
    }
    return primary();
  }

  ExprPtr integer_literal(bool negative) {
    std::size_t at = pos_;
    std::string spelling = (negative ? "-" : "") + advance().text;
    auto v = text::parse_integer<std::int64_t>(spelling);
    if (!v) fail_at(at, "integer literal out of range: " + spelling);
    return make_const(data::Value(*v));
  }

  ExprPtr float_literal(bool negative) {
    std::size_t at = pos_;
    std::string spelling = (negative ? "-" : "") + advance().text;
    auto v = text::parse_double(spelling);
    if (!v) fail_at(at, "bad float literal: " + spelling);
    return make_const(data::Value(*v));
  }

  ExprPtr primary() {
    if (check(TokenKind::Integer)) return integer_literal(false);
    if (check(TokenKind::Float)) return float_literal(false);
    if (check(TokenKind::String)) return make_const(data::Value(advance().text));
    if (match(TokenKind::LParen)) {
      auto inner = expr();
      expect(TokenKind::RParen, "')'");
      return inner;
    }
    if (match(TokenKind::Group)) return make_field("group");
    if (check(TokenKind::Ident)) {
      std::size_t at = pos_;
      std::string name = advance().text;
      if (match(TokenKind::LParen)) {
        auto fn = builtin_from_name(name);
        if (!fn) fail_at(at, "unknown function '" + name + "'");
        std::vector<ExprPtr> args;
        if (!check(TokenKind::RParen)) {
          do {
            args.push_back(expr());
          } while (match(TokenKind::Comma));
        }
        expect(TokenKind::RParen, "')'");
        return make_call(*fn, std::move(args));
      }
      if (match(TokenKind::DoubleColon)) name += "::" + ident("field name");
      std::optional<std::string> member;
      if (match(TokenKind::Dot)) member = ident("field name");
      return make_field(std::move(name), std::move(member));
    }
    fail("expected an expression");
  }

  void require_alias(const std::string& name) {
    if (!plan_.aliases.count(name)) throw PlanError("undefined alias '" + name + "'");
  }

  void add_node(std::string alias, PlanOp op) {
    if (std::holds_alternative<StoreOp>(op)) {
      // Every chain is rooted at a LOAD because inputs must pre-exist, but the
      // invariant is cheap to assert directly.
      if (!reaches_load(std::get<StoreOp>(op).input)) {
        throw PlanError("STORE input does not reach a LOAD");
      }
    }
    plan_.nodes.push_back(PlanNode{alias, std::move(op), std::nullopt});
    if (!alias.empty()) plan_.aliases.emplace(alias, plan_.nodes.size() - 1);
  }

  bool reaches_load(const std::string& alias) const {
    const auto& node = plan_.nodes[plan_.aliases.at(alias)];
    if (std::holds_alternative<LoadOp>(node.op)) return true;
    for (const auto& in : op_inputs(node.op)) {
      if (reaches_load(in)) return true;
    }
    return false;
  }

  std::string ident(const char* what) {
    if (!check(TokenKind::Ident)) fail(std::string("expected ") + what);
    return advance().text;
  }

  const Token& expect(TokenKind kind, const char* what) {
    if (!check(kind)) fail(std::string("expected ") + what);
    return advance();
  }

  bool at_end() const { return pos_ >= toks_.size(); }
  bool check(TokenKind kind) const { return !at_end() && toks_[pos_].kind == kind; }
  bool match(TokenKind kind) {
    if (!check(kind)) return false;
    ++pos_;
    return true;
  }
  const Token& advance() { return toks_[pos_++]; }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::Ident || t.kind == TokenKind::Integer || t.kind == TokenKind::Float) {
      return std::string(token_kind_name(t.kind)) + " '" + t.text + "'";
    }
    if (t.kind == TokenKind::String) return "string '" + t.text + "'";
    return std::string(token_kind_name(t.kind));
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }

  [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
    if (at < toks_.size()) {
      const Token& t = toks_[at];
      throw SyntaxError(at, t.line, t.column, what + ", found " + describe(t));
    }
    std::size_t line = toks_.empty() ? 1 : toks_.back().line;
    std::size_t col = toks_.empty() ? 1 : toks_.back().column;
    throw SyntaxError(at, line, col, what + ", found end of input");
  }

  const std::vector<Token>& toks_;
  LogicalPlan& plan_;
  std::size_t pos_ = 0;
};

}  // namespace

LogicalPlan parse_script(const std::vector<Token>& tokens) {
  LogicalPlan plan;
  Parser(tokens, plan).script();
  return plan;
}

LogicalPlan parse_script(std::string_view source) { return parse_script(tokenize_script(source)); }

void append_statement(LogicalPlan& plan, const std::vector<Token>& statement_tokens) {
  LogicalPlan scratch = plan;
  Parser parser(statement_tokens, scratch);
  parser.script();
  plan = std::move(scratch);
}

// --- pretty printer --------------------------------------------------------

namespace {

std::string field_list_text(const std::vector<std::string>& keys) {
  if (keys.size() == 1) return keys.front();
  std::string out = "(";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ", ";
    out += keys[i];
  }
  return out + ')';
}

}  // namespace

std::string render_plan(const LogicalPlan& plan) {
  std::string out;
  for (const auto& node : plan.nodes) {
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, StoreOp>) {
            out += "STORE " + op.input + " INTO " + quote(op.path);
          } else {
            out += node.alias + " = ";
            if constexpr (std::is_same_v<T, LoadOp>) {
              out += "LOAD " + quote(op.path) + " AS (" + op.schema.to_string() + ")";
            } else if constexpr (std::is_same_v<T, FilterOp>) {
              out += "FILTER " + op.input + " BY " + render_expr(*op.predicate);
            } else if constexpr (std::is_same_v<T, ForeachOp>) {
              out += "FOREACH " + op.input + " GENERATE ";
              for (std::size_t i = 0; i < op.items.size(); ++i) {
                if (i) out += ", ";
                out += render_expr(*op.items[i].expr);
                if (op.items[i].alias) out += " AS " + *op.items[i].alias;
              }
            } else if constexpr (std::is_same_v<T, GroupOp>) {
              out += "GROUP " + op.input + " BY " + field_list_text(op.keys);
            } else if constexpr (std::is_same_v<T, JoinOp>) {
              out += "JOIN " + op.left + " BY " + field_list_text(op.left_keys) + ", " + op.right +
                     " BY " + field_list_text(op.right_keys);
            } else if constexpr (std::is_same_v<T, OrderOp>) {
              out += "ORDER " + op.input + " BY " + field_list_text(op.keys);
              if (op.descending) out += " DESC";
            }
          }
          out += ";\n";
        },
        node.op);
  }
  return out;
}

bool same_plan(const LogicalPlan& a, const LogicalPlan& b) {
  if (a.nodes.size() != b.nodes.size() || a.aliases != b.aliases) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& x = a.nodes[i];
    const auto& y = b.nodes[i];
    if (x.alias != y.alias || x.op.index() != y.op.index()) return false;
    bool same = std::visit(
        [&](const auto& p) -> bool {
          using T = std::decay_t<decltype(p)>;
          const auto& q = std::get<T>(y.op);
          if constexpr (std::is_same_v<T, LoadOp>) {
            return p.path == q.path && p.schema == q.schema && p.format == q.format;
          } else if constexpr (std::is_same_v<T, FilterOp>) {
            return p.input == q.input && same_expr(*p.predicate, *q.predicate);
          } else if constexpr (std::is_same_v<T, ForeachOp>) {
            if (p.input != q.input || p.items.size() != q.items.size()) return false;
            for (std::size_t k = 0; k < p.items.size(); ++k) {
              if (p.items[k].alias != q.items[k].alias) return false;
              if (!same_expr(*p.items[k].expr, *q.items[k].expr)) return false;
            }
            return true;
          } else if constexpr (std::is_same_v<T, GroupOp>) {
            return p.input == q.input && p.keys == q.keys;
          } else if constexpr (std::is_same_v<T, JoinOp>) {
            return p.left == q.left && p.left_keys == q.left_keys && p.right == q.right &&
                   p.right_keys == q.right_keys;
          } else if constexpr (std::is_same_v<T, OrderOp>) {
            return p.input == q.input && p.keys == q.keys && p.descending == q.descending;
          } else {
            return p.input == q.input && p.path == q.path;
          }
        },
        x.op);
    if (!same) return false;
  }
  return true;
}

}  // namespace flowlatin::script
