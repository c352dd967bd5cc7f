#include "flowlatin/value.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include "flowlatin/text.hpp"

namespace flowlatin::data {

double Value::as_number() const {
  if (kind() == ValueKind::Int) return static_cast<double>(as_int());
  return as_float();
}

namespace {

int rank(ValueKind k) {
  switch (k) {
    case ValueKind::Int:
    case ValueKind::Float: return 0;
    case ValueKind::CharArray: return 1;
    case ValueKind::Tuple: return 2;
    case ValueKind::Bag: return 3;
  }
  return 4;
}

std::weak_ordering compare_int_float(std::int64_t i, double d) {
  if (std::isnan(d)) return std::weak_ordering::less;
  // 2^63 is exactly representable; every int64 is below it.
  constexpr double kTwo63 = 9223372036854775808.0;
  if (d >= kTwo63) return std::weak_ordering::less;
  if (d < -kTwo63) return std::weak_ordering::greater;
  double whole = std::trunc(d);
  auto t = static_cast<std::int64_t>(whole);
  if (i != t) return i <=> t;
  double frac = d - whole;
  if (frac > 0) return std::weak_ordering::less;
  if (frac < 0) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

std::weak_ordering compare_float(double a, double b) {
  bool na = std::isnan(a);
  bool nb = std::isnan(b);
  if (na || nb) {
    if (na && nb) return std::weak_ordering::equivalent;
    return na ? std::weak_ordering::greater : std::weak_ordering::less;
  }
  if (a < b) return std::weak_ordering::less;
  if (a > b) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

std::weak_ordering compare_numeric(const Value& a, const Value& b) {
  bool ai = a.kind() == ValueKind::Int;
  bool bi = b.kind() == ValueKind::Int;
  if (ai && bi) return a.as_int() <=> b.as_int();
  if (!ai && !bi) return compare_float(a.as_float(), b.as_float());
  if (ai) return compare_int_float(a.as_int(), b.as_float());
  auto r = compare_int_float(b.as_int(), a.as_float());
  return 0 <=> r;
}

std::vector<Tuple> sorted_tuples(const Bag& bag) {
  std::vector<Tuple> out = bag.tuples;
  std::sort(out.begin(), out.end(), TupleLess{});
  return out;
}

std::weak_ordering compare_tuple_lists(const std::vector<Tuple>& a, const std::vector<Tuple>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  return a.size() <=> b.size();
}

std::size_t mix(std::size_t seed, std::size_t h) {
  return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_int(std::int64_t v) {
  auto x = static_cast<std::uint64_t>(v);
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return static_cast<std::size_t>(x);
}

}  // namespace

std::weak_ordering compare(const Tuple& a, const Tuple& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  return a.size() <=> b.size();
}

std::weak_ordering compare(const Value& a, const Value& b) {
  int ra = rank(a.kind());
  int rb = rank(b.kind());
  if (ra != rb) return ra <=> rb;
  switch (a.kind()) {
    case ValueKind::Int:
    case ValueKind::Float: return compare_numeric(a, b);
    case ValueKind::CharArray: {
      int c = a.as_text().compare(b.as_text());
      return c < 0 ? std::weak_ordering::less
                   : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
    }
    case ValueKind::Tuple: return compare(a.as_tuple(), b.as_tuple());
    case ValueKind::Bag:
      return compare_tuple_lists(sorted_tuples(a.as_bag()), sorted_tuples(b.as_bag()));
  }
  return std::weak_ordering::equivalent;
}

std::size_t hash_value(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return hash_int(v.as_int());
    case ValueKind::Float: {
      double d = v.as_float();
      if (std::isnan(d)) return 0x7ff8dead;
      constexpr double kTwo63 = 9223372036854775808.0;
      if (d == std::trunc(d) && d >= -kTwo63 && d < kTwo63) {
        return hash_int(static_cast<std::int64_t>(d));
      }
      return hash_int(static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(d)));
    }
    case ValueKind::CharArray: return std::hash<std::string>{}(v.as_text());
    case ValueKind::Tuple: {
      std::size_t seed = 0x7475706c;
      for (const auto& e : v.as_tuple()) seed = mix(seed, hash_value(e));
      return seed;
    }
    case ValueKind::Bag: {
      // Order-independent: bags are multisets.
      std::size_t sum = 0x626167;
      for (const auto& t : v.as_bag().tuples) sum += hash_value(Value(t));
      return sum;
    }
  }
  return 0;
}

std::size_t approximate_bytes(const Value& v) {
  std::size_t n = sizeof(Value);
  switch (v.kind()) {
    case ValueKind::CharArray: n += v.as_text().size(); break;
    case ValueKind::Tuple:
      for (const auto& e : v.as_tuple()) n += approximate_bytes(e);
      break;
    case ValueKind::Bag:
      for (const auto& t : v.as_bag().tuples) {
        n += sizeof(Tuple);
        for (const auto& e : t) n += approximate_bytes(e);
      }
      break;
    default: break;
  }
  return n;
}

std::string debug_string(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return text::format_double_exact(v.as_float());
    case ValueKind::CharArray: return '"' + v.as_text() + '"';
    case ValueKind::Tuple: {
      std::string out = "(";
      const auto& t = v.as_tuple();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ',';
        out += debug_string(t[i]);
      }
      return out + ')';
    }
    case ValueKind::Bag: {
      std::string out = "{";
      const auto& b = v.as_bag().tuples;
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) out += ',';
        out += debug_string(Value(b[i]));
      }
      return out + '}';
    }
  }
  return {};
}

}  // namespace flowlatin::data
