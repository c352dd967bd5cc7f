#include "flowlatin/schema.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "flowlatin/error.hpp"
#include "flowlatin/text.hpp"

namespace flowlatin::data {

FieldType FieldType::tuple_of(Schema inner) {
  return {TypeKind::Tuple, std::make_shared<const Schema>(std::move(inner))};
}

FieldType FieldType::bag_of(Schema inner) {
  return {TypeKind::Bag, std::make_shared<const Schema>(std::move(inner))};
}

bool operator==(const FieldType& a, const FieldType& b) {
  if (a.kind != b.kind) return false;
  if (a.is_scalar()) return true;
  if (!a.inner || !b.inner) return a.inner == b.inner;
  return *a.inner == *b.inner;
}

std::string FieldType::to_string() const {
  switch (kind) {
    case TypeKind::Int: return "int";
    case TypeKind::Float: return "float";
    case TypeKind::CharArray: return "chararray";
    case TypeKind::Tuple: return "tuple(" + (inner ? inner->to_string() : "") + ")";
    case TypeKind::Bag: return "bag{" + (inner ? inner->to_string() : "") + "}";
  }
  return "?";
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == name) return i;
  }
  return std::nullopt;
}

std::string Schema::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += fields[i].name + ':' + fields[i].type.to_string();
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && text::is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && text::is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Schema parse_schema(std::string_view body) {
  if (trim(body).empty()) throw SchemaError("empty schema");
  Schema schema;
  std::unordered_set<std::string> seen;
  for (auto part : text::split(body, ',')) {
    part = trim(part);
    auto colon = part.find(':');
    if (colon == std::string_view::npos) {
      throw SchemaError("field '" + std::string(part) + "' has no type");
    }
    auto name = trim(part.substr(0, colon));
    auto type = lower(trim(part.substr(colon + 1)));
    if (!is_identifier(name)) throw SchemaError("invalid field name '" + std::string(name) + "'");
    FieldType ft;
    if (type == "int") {
      ft = FieldType::int_type();
    } else if (type == "float") {
      ft = FieldType::float_type();
    } else if (type == "chararray") {
      ft = FieldType::chararray_type();
    } else {
      throw SchemaError("unknown type '" + type + "' for field '" + std::string(name) + "'");
    }
    if (!seen.insert(std::string(name)).second) {
      throw SchemaError("duplicate field name '" + std::string(name) + "'");
    }
    schema.fields.push_back({std::string(name), ft});
  }
  return schema;
}

namespace {

Value coerce_cell(std::string_view cell, const Field& field) {
  switch (field.type.kind) {
    case TypeKind::Int: {
      auto v = text::parse_integer<std::int64_t>(cell);
      if (!v) throw CoerceError(field.name, "not an int: '" + std::string(cell) + "'");
      return Value(*v);
    }
    case TypeKind::Float: {
      auto v = text::parse_double(cell);
      if (!v) throw CoerceError(field.name, "not a float: '" + std::string(cell) + "'");
      return Value(*v);
    }
    case TypeKind::CharArray: return Value(std::string(cell));
    default: throw CoerceError(field.name, "cannot load a nested field from text");
  }
}

template <typename Cell>
Tuple coerce_cells(std::span<const Cell> cells, const Schema& schema) {
  if (cells.size() != schema.size()) {
    throw CoerceError("", "arity mismatch: " + std::to_string(cells.size()) + " cells for " +
                              std::to_string(schema.size()) + " fields");
  }
  Tuple row;
  row.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    row.push_back(coerce_cell(std::string_view(cells[i]), schema.fields[i]));
  }
  return row;
}

}  // namespace

Tuple coerce_row(std::span<const std::string_view> cells, const Schema& schema) {
  return coerce_cells(cells, schema);
}

Tuple coerce_row(std::span<const std::string> cells, const Schema& schema) {
  return coerce_cells(cells, schema);
}

std::vector<std::string_view> load_cells(std::string_view line, const Schema& schema) {
  if (schema.size() == 1) return {line};
  return text::split(line, '\t');
}

std::string render_value(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return text::format_double_short(v.as_float());
    case ValueKind::CharArray: return v.as_text();
    case ValueKind::Tuple: {
      std::string out = "(";
      const auto& t = v.as_tuple();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ',';
        out += render_value(t[i]);
      }
      return out + ')';
    }
    case ValueKind::Bag: {
      std::string out = "{";
      const auto& b = v.as_bag().tuples;
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) out += ',';
        out += render_value(Value(b[i]));
      }
      return out + '}';
    }
  }
  return {};
}

std::string render_row(const Tuple& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += '\t';
    out += render_value(row[i]);
  }
  return out;
}

namespace {

bool needs_escape(char c) {
  switch (c) {
    case '\\': case '\t': case '\n': case '\r': case ',': case '(': case ')': case '{': case '}':
      return true;
    default: return false;
  }
}

void encode_value(const Value& v, std::string& out) {
  switch (v.kind()) {
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Float: out += text::format_double_exact(v.as_float()); break;
    case ValueKind::CharArray:
      for (char c : v.as_text()) {
        if (!needs_escape(c)) {
          out += c;
          continue;
        }
        out += '\\';
        out += c == '\t' ? 't' : c == '\n' ? 'n' : c == '\r' ? 'r' : c;
      }
      break;
    case ValueKind::Tuple: {
      out += '(';
      const auto& t = v.as_tuple();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ',';
        encode_value(t[i], out);
      }
      out += ')';
      break;
    }
    case ValueKind::Bag: {
      out += '{';
      const auto& b = v.as_bag().tuples;
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) out += ',';
        encode_value(Value(b[i]), out);
      }
      out += '}';
      break;
    }
  }
}

class ExactDecoder {
 public:
  ExactDecoder(std::string_view s, const std::string& field) : s_(s), field_(field) {}

  Value value(const FieldType& type, bool nested) {
    switch (type.kind) {
      case TypeKind::Int: {
        auto tok = scalar_token(nested);
        auto v = text::parse_integer<std::int64_t>(tok);
        if (!v) fail("bad int '" + std::string(tok) + "'");
        return Value(*v);
      }
      case TypeKind::Float: {
        auto tok = scalar_token(nested);
        auto v = text::parse_double(tok);
        if (!v) fail("bad float '" + std::string(tok) + "'");
        return Value(*v);
      }
      case TypeKind::CharArray: return Value(chararray(nested));
      case TypeKind::Tuple: return Value(tuple(*type.inner));
      case TypeKind::Bag: {
        expect('{');
        Bag bag;
        if (peek() != '}') {
          while (true) {
            bag.tuples.push_back(tuple(*type.inner));
            if (peek() == ',') {
              ++pos_;
              continue;
            }
            break;
          }
        }
        expect('}');
        return Value(std::move(bag));
      }
    }
    fail("unknown type");
  }

  bool done() const { return pos_ == s_.size(); }

 private:
  Tuple tuple(const Schema& schema) {
    expect('(');
    Tuple t;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (i) expect(',');
      t.push_back(value(schema.fields[i].type, true));
    }
    expect(')');
    return t;
  }

  std::string_view scalar_token(bool nested) {
    std::size_t start = pos_;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (nested && (c == ',' || c == ')' || c == '}')) break;
      ++pos_;
    }
    return s_.substr(start, pos_ - start);
  }

  std::string chararray(bool nested) {
    std::string out;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '\\') {
        if (pos_ + 1 >= s_.size()) fail("dangling escape");
        char e = s_[pos_ + 1];
        out += e == 't' ? '\t' : e == 'n' ? '\n' : e == 'r' ? '\r' : e;
        pos_ += 2;
        continue;
      }
      if (nested && (c == ',' || c == ')' || c == '}')) break;
      out += c;
      ++pos_;
    }
    return out;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CoerceError(field_, what + " at column " + std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  const std::string& field_;
};

}  // namespace

std::string encode_row(const Tuple& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += '\t';
    encode_value(row[i], out);
  }
  return out;
}

Tuple decode_row(std::string_view line, const Schema& schema) {
  auto cells = text::split(line, '\t');
  if (cells.size() != schema.size()) {
    throw CoerceError("", "arity mismatch: " + std::to_string(cells.size()) + " cells for " +
                              std::to_string(schema.size()) + " fields");
  }
  Tuple row;
  row.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    ExactDecoder dec(cells[i], schema.fields[i].name);
    row.push_back(dec.value(schema.fields[i].type, false));
    if (!dec.done()) throw CoerceError(schema.fields[i].name, "trailing characters");
  }
  return row;
}

bool conforms(const Value& v, const FieldType& type) {
  switch (type.kind) {
    case TypeKind::Int: return v.kind() == ValueKind::Int;
    case TypeKind::Float: return v.kind() == ValueKind::Float;
    case TypeKind::CharArray: return v.kind() == ValueKind::CharArray;
    case TypeKind::Tuple: {
      if (v.kind() != ValueKind::Tuple || !type.inner) return false;
      const auto& t = v.as_tuple();
      if (t.size() != type.inner->size()) return false;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!conforms(t[i], type.inner->fields[i].type)) return false;
      }
      return true;
    }
    case TypeKind::Bag: {
      if (v.kind() != ValueKind::Bag || !type.inner) return false;
      auto tuple_type = FieldType{TypeKind::Tuple, type.inner};
      return std::all_of(v.as_bag().tuples.begin(), v.as_bag().tuples.end(),
                         [&](const Tuple& t) { return conforms(Value(t), tuple_type); });
    }
  }
  return false;
}

}  // namespace flowlatin::data
