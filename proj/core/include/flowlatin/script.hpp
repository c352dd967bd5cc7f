#pragma once

// The dataflow script language: tokens, expressions, the logical plan DAG,
// and the parse / schema-inference / pretty-print passes over it.
//
//   script := { stmt ";" }
//   stmt   := ident "=" op | "STORE" ident "INTO" string
//   op     := "LOAD" string "AS" "(" schema ")"
//           | "FILTER" ident "BY" expr
//           | "FOREACH" ident "GENERATE" item { "," item }
//           | "GROUP" ident "BY" fieldlist
//           | "JOIN" ident "BY" fieldlist "," ident "BY" fieldlist
//           | "ORDER" ident "BY" fieldlist [ "DESC" ]
//   item   := expr [ "AS" ident ]
//   fieldlist := field | "(" field { "," field } ")"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowlatin/schema.hpp"
#include "flowlatin/value.hpp"

namespace flowlatin::script {

enum class TokenKind : std::uint8_t {
  Ident,
  String,
  Integer,
  Float,
  // keywords
  Load, As, Filter, By, Foreach, Generate, Group, Join, Order, Store, Into, And, Or, Desc,
  // punctuation
  Assign, LParen, RParen, Comma, Semicolon, Colon, DoubleColon, Dot,
  Plus, Minus, Star, Slash, EqEq, NotEq, Lt, Le, Gt, Ge,
};

struct Token {
  TokenKind kind;
  std::string text;  // identifier spelling, string contents, or number spelling
  std::size_t line = 1;
  std::size_t column = 1;

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.text == b.text;
  }
};

std::string_view token_kind_name(TokenKind kind);

/// Keywords are case-insensitive, identifiers case-sensitive, strings are
/// single-quoted (backslash escapes \' \\ \n \t), `--` starts a line comment.
/// Throws LexError with line/column.
std::vector<Token> tokenize_script(std::string_view source);

// --- expressions -----------------------------------------------------------

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class Builtin : std::uint8_t { Count, Sum, Min, Max, Avg, Tokenize, Flatten };

std::string_view binary_op_text(BinaryOp op);
std::string_view builtin_name(Builtin fn);
bool is_aggregate(Builtin fn);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// `name` may be alias-qualified ("S::src_ip"); `member` selects a field of
/// every tuple in a bag ("C.contribution").
struct FieldRef {
  std::string name;
  std::optional<std::string> member;
  friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

struct Const {
  data::Value value;  // Int, Float or CharArray
};

struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Call {
  Builtin fn;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<FieldRef, Const, Binary, Call> node;
};

ExprPtr make_field(std::string name, std::optional<std::string> member = std::nullopt);
ExprPtr make_const(data::Value v);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Builtin fn, std::vector<ExprPtr> args);

/// Structural equality (constants compare by kind and exact value).
bool same_expr(const Expr& a, const Expr& b);
std::string render_expr(const Expr& e);

// --- logical plan ----------------------------------------------------------

struct GenerateItem {
  ExprPtr expr;
  std::optional<std::string> alias;
};

/// Text: LOAD/STORE line format. Exact: an intermediate dataset written by
/// the engine (used when the console re-reads materialized aliases).
enum class LoadFormat : std::uint8_t { Text, Exact };

struct LoadOp {
  std::string path;
  data::Schema schema;
  LoadFormat format = LoadFormat::Text;
};
struct FilterOp {
  std::string input;
  ExprPtr predicate;
};
struct ForeachOp {
  std::string input;
  std::vector<GenerateItem> items;
};
struct GroupOp {
  std::string input;
  std::vector<std::string> keys;
};
struct JoinOp {
  std::string left;
  std::vector<std::string> left_keys;
  std::string right;
  std::vector<std::string> right_keys;
};
struct OrderOp {
  std::string input;
  std::vector<std::string> keys;
  bool descending = false;
};
struct StoreOp {
  std::string input;
  std::string path;
};

using PlanOp = std::variant<LoadOp, FilterOp, ForeachOp, GroupOp, JoinOp, OrderOp, StoreOp>;

struct PlanNode {
  std::string alias;  // empty for STORE
  PlanOp op;
  std::optional<data::Schema> schema;  // filled by infer_schemas
};

/// Statement-ordered DAG. Every non-Load node refers only to aliases defined
/// by earlier statements.
struct LogicalPlan {
  std::vector<PlanNode> nodes;
  std::map<std::string, std::size_t, std::less<>> aliases;

  const PlanNode& at(std::string_view alias) const;
  std::optional<std::size_t> find(std::string_view alias) const;
  /// Indices of the nodes this node reads.
  std::vector<std::size_t> inputs_of(std::size_t node) const;
  std::size_t store_count() const;
};

std::vector<std::string> op_inputs(const PlanOp& op);
std::string_view op_name(const PlanOp& op);

/// Throws SyntaxError (a ParseError carrying the token position) or PlanError
/// for undefined / reassigned aliases and STOREs that never reach a LOAD.
LogicalPlan parse_script(const std::vector<Token>& tokens);
LogicalPlan parse_script(std::string_view source);

/// Appends one statement to an existing plan (used by the console).
void append_statement(LogicalPlan& plan, const std::vector<Token>& statement_tokens);

/// Fills PlanNode::schema for every node. Throws TypeError.
LogicalPlan infer_schemas(LogicalPlan plan);

/// Static type of `expr` over `input`; `group_context` enables aggregates.
data::FieldType expr_type(const Expr& expr, const data::Schema& input, bool group_context);

/// Resolves a possibly unqualified field name against a schema: exact match
/// first, then a unique "alias::name" suffix match. Throws TypeError.
std::size_t resolve_field(const data::Schema& schema, std::string_view name);

/// Canonical script text; parse_script(render_plan(p)) is structurally p.
std::string render_plan(const LogicalPlan& plan);
bool same_plan(const LogicalPlan& a, const LogicalPlan& b);

}  // namespace flowlatin::script
