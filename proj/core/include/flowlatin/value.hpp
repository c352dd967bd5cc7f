#pragma once

// Dataflow values: integer and float atoms, chararrays, tuples and bags.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flowlatin::data {

class Value;

using Tuple = std::vector<Value>;

/// Multiset of tuples. Element order is kept as inserted but ignored by
/// comparison.
struct Bag {
  std::vector<Tuple> tuples;
};

enum class ValueKind : std::uint8_t { Int, Float, CharArray, Tuple, Bag };

class Value {
 public:
  using Storage = std::variant<std::int64_t, double, std::string, Tuple, Bag>;

  Value() : storage_(std::int64_t{0}) {}
  Value(std::int64_t v) : storage_(v) {}  // NOLINT(google-explicit-constructor)
  Value(int v) : storage_(std::int64_t{v}) {}  // NOLINT(google-explicit-constructor)
  Value(double v) : storage_(v) {}  // NOLINT(google-explicit-constructor)
  Value(std::string v) : storage_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  Value(const char* v) : storage_(std::string(v)) {}  // NOLINT(google-explicit-constructor)
  Value(Tuple v) : storage_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  Value(Bag v) : storage_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  ValueKind kind() const noexcept { return static_cast<ValueKind>(storage_.index()); }
  bool is_numeric() const noexcept {
    return kind() == ValueKind::Int || kind() == ValueKind::Float;
  }

  std::int64_t as_int() const { return std::get<std::int64_t>(storage_); }
  double as_float() const { return std::get<double>(storage_); }
  /// Int or Float widened to double.
  double as_number() const;
  const std::string& as_text() const { return std::get<std::string>(storage_); }
  const Tuple& as_tuple() const { return std::get<Tuple>(storage_); }
  Tuple& as_tuple() { return std::get<Tuple>(storage_); }
  const Bag& as_bag() const { return std::get<Bag>(storage_); }
  Bag& as_bag() { return std::get<Bag>(storage_); }

  const Storage& storage() const noexcept { return storage_; }

 private:
  Storage storage_;
};

/// Total order used by shuffle and ORDER:
/// numbers (Int and Float compared by exact numeric value, NaN last) <
/// chararray (byte order) < tuple (lexicographic) < bag (sorted tuples,
/// lexicographic). Int 2 and Float 2.0 are equivalent.
std::weak_ordering compare(const Value& a, const Value& b);
std::weak_ordering compare(const Tuple& a, const Tuple& b);

/// Equivalence under compare.
inline bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
inline std::weak_ordering operator<=>(const Value& a, const Value& b) { return compare(a, b); }

/// Hash consistent with compare: equivalent values hash equally.
std::size_t hash_value(const Value& v);

struct ValueHash {
  std::size_t operator()(const Value& v) const { return hash_value(v); }
};
struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return compare(a, b) < 0; }
};
struct TupleLess {
  bool operator()(const Tuple& a, const Tuple& b) const { return compare(a, b) < 0; }
};

/// Rough in-memory footprint, used for spill accounting.
std::size_t approximate_bytes(const Value& v);

/// Debug form, e.g. (1,"a",{(2.5)}). Not a storage format.
std::string debug_string(const Value& v);

}  // namespace flowlatin::data
