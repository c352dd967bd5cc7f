#pragma once

// Schemas and the two row codecs:
//  - the LOAD/STORE text form (coerce_row / render_row), tab-separated with
//    short floats, used for user-facing files;
//  - the exact form (encode_row / decode_row) used for intermediate datasets,
//    which escapes chararrays and keeps floats bit-exact.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlatin/value.hpp"

namespace flowlatin::data {

struct Schema;

enum class TypeKind : std::uint8_t { Int, Float, CharArray, Tuple, Bag };

struct FieldType {
  TypeKind kind = TypeKind::CharArray;
  /// Element schema of a Tuple field, or tuple schema of a Bag field.
  std::shared_ptr<const Schema> inner;

  static FieldType int_type() { return {TypeKind::Int, nullptr}; }
  static FieldType float_type() { return {TypeKind::Float, nullptr}; }
  static FieldType chararray_type() { return {TypeKind::CharArray, nullptr}; }
  static FieldType tuple_of(Schema inner);
  static FieldType bag_of(Schema inner);

  bool is_scalar() const noexcept { return kind != TypeKind::Tuple && kind != TypeKind::Bag; }
  bool is_numeric() const noexcept { return kind == TypeKind::Int || kind == TypeKind::Float; }
  std::string to_string() const;

  friend bool operator==(const FieldType& a, const FieldType& b);
};

struct Field {
  std::string name;
  FieldType type;
  friend bool operator==(const Field&, const Field&) = default;
};

struct Schema {
  std::vector<Field> fields;

  std::size_t size() const noexcept { return fields.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// name:type pairs, e.g. "protocol:chararray, flow:int".
  std::string to_string() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// Parses `name:type (, name:type)*` with type in {chararray, int, float}.
/// Throws SchemaError on empty input, duplicate names, unknown types.
Schema parse_schema(std::string_view text);

/// LOAD-side conversion of text cells. Throws CoerceError.
Tuple coerce_row(std::span<const std::string_view> cells, const Schema& schema);
Tuple coerce_row(std::span<const std::string> cells, const Schema& schema);

/// Splits a LOAD line into cells: a single-field schema takes the whole
/// line, otherwise cells are tab-separated.
std::vector<std::string_view> load_cells(std::string_view line, const Schema& schema);

/// STORE-side formatting of one tuple: tab-separated cells, floats with at
/// most 6 significant digits, bags as {(a,b),(c,d)}.
std::string render_row(const Tuple& row);
std::string render_value(const Value& v);

/// Bit-exact, escaped encoding of one tuple (no trailing newline).
std::string encode_row(const Tuple& row);
/// Inverse of encode_row under `schema`. Throws CoerceError.
Tuple decode_row(std::string_view line, const Schema& schema);

/// True when `v` is a well-formed instance of `type`.
bool conforms(const Value& v, const FieldType& type);

}  // namespace flowlatin::data
