#pragma once

#include <span>
#include <vector>

namespace flowlatin {

/// Floating-point accumulator whose result is the correctly rounded value of
/// the exact sum of its inputs, so it does not depend on the order or grouping
/// of additions. State is a list of non-overlapping partials (Shewchuk).
class ExactSum {
 public:
  ExactSum() = default;

  void add(double x);
  void merge(const ExactSum& other);
  double value() const;

  /// Non-overlapping partials in increasing magnitude; their exact sum is the
  /// running total. Non-finite inputs are tracked separately.
  const std::vector<double>& partials() const noexcept { return partials_; }
  /// Rebuilds an accumulator from another accumulator's partials().
  static ExactSum from_partials(std::span<const double> partials);

 private:
  std::vector<double> partials_;
  double special_ = 0.0;  // sum of inf/nan inputs
  bool has_special_ = false;
};

/// Convenience: correctly rounded sum of `values`.
double exact_sum(std::span<const double> values);

}  // namespace flowlatin
