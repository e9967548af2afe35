#include "dpo/shanks.hpp"

#include <algorithm>
#include <cmath>

#include "dpo/params.hpp"

namespace dpo {

namespace {
constexpr double kDegenerateRel = 1e-14;
}

ShanksResult shanks_triple(double prev, double cur, double next) {
  const double den = next + prev - 2.0 * cur;
  const double scale = std::max({std::abs(prev), std::abs(cur), std::abs(next)});
  if (std::abs(den) < kDegenerateRel * scale || den == 0.0) return {next, true, 1};
  // (next*prev - cur^2)/den written as next - (next-cur)^2/den to avoid
  // cancellation when the terms are large compared to their differences.
  const double d = next - cur;
  return {next - d * d / den, false, 1};
}

std::vector<double> shanks_pass(std::span<const double> seq, bool* degenerate) {
  std::vector<double> out;
  if (seq.size() < 3) return out;
  out.reserve(seq.size() - 2);
  for (std::size_t i = 1; i + 1 < seq.size(); ++i) {
    const auto r = shanks_triple(seq[i - 1], seq[i], seq[i + 1]);
    if (r.degenerate && degenerate) *degenerate = true;
    out.push_back(r.value);
  }
  return out;
}

ShanksResult shanks(std::span<const double> seq) {
  if (seq.size() < 3) throw ParameterError("shanks: need at least three terms");
  ShanksResult result;
  std::vector<double> current(seq.begin(), seq.end());
  while (current.size() >= 3) {
    bool degenerate = false;
    current = shanks_pass(current, &degenerate);
    ++result.passes;
    if (degenerate) {
      // Further passes would only amplify the noise of a converged tail.
      result.degenerate = true;
      break;
    }
  }
  result.value = current.back();
  return result;
}

}  // namespace dpo
