// Shanks sequence acceleration, used to extrapolate observables over
// Fock-space truncation sizes.

#pragma once

#include <span>
#include <vector>

namespace dpo {

struct ShanksResult {
  double value = 0.0;
  bool degenerate = false;  ///< a vanishing denominator was hit; value is the last raw term
  int passes = 0;           ///< how many times the transform was applied
};

/// One Shanks step on (A_{n-1}, A_n, A_{n+1}).
ShanksResult shanks_triple(double prev, double cur, double next);

/// Applies the transform to every consecutive triple and repeats on the
/// transformed sequence while at least three terms remain; the last
/// surviving value is returned. Requires at least three terms.
ShanksResult shanks(std::span<const double> seq);

/// One pass of the transform over every triple (length shrinks by two).
std::vector<double> shanks_pass(std::span<const double> seq, bool* degenerate = nullptr);

}  // namespace dpo
