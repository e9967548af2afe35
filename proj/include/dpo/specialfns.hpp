// Terminating Gauss hypergeometric values F(-k, x; 2x; 2).
//
// The series at argument 2 alternates with partial sums of size up to ~3^k
// while the result can be many orders of magnitude smaller, so the sum is
// accumulated in MPFR with a working precision chosen from the observed
// cancellation. Results are returned as double together with log|F|.

#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dpo {

inline constexpr int kDefaultHypKMax = 500;

struct HypOverflow : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct HypValue {
  double value = 0.0;       ///< F(-k, x; 2x; 2) rounded to double
  long double log_abs = 0;  ///< log|F|, -inf when the value is zero
  int sign = 0;             ///< -1, 0, +1
  int precision_bits = 0;   ///< final MPFR precision used
};

/// Sum_{j=0..k} (-k)_j (x)_j / ((2x)_j j!) 2^j. Throws HypOverflow for k > k_max.
HypValue hyp2f1_terminating_full(int k, double x, int k_max = kDefaultHypKMax);

inline double hyp2f1_terminating(int k, double x, int k_max = kDefaultHypKMax) {
  return hyp2f1_terminating_full(k, x, k_max).value;
}

/// Immutable table of F(-k, x; 2x; 2) for k = 0..k_max.
class HypTable {
 public:
  HypTable(double x, int k_max);

  double x() const { return x_; }
  int k_max() const { return static_cast<int>(entries_.size()) - 1; }
  const HypValue& operator[](int k) const { return entries_.at(static_cast<std::size_t>(k)); }
  double value(int k) const { return (*this)[k].value; }

 private:
  double x_;
  std::vector<HypValue> entries_;
};

/// Process-wide cache keyed on (x, k_max); thread-safe.
std::shared_ptr<const HypTable> shared_hyp_table(double x, int k_max);

}  // namespace dpo
