#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ratewise/error.hpp"

namespace ratewise {

// Kendall tau-a between two orderings of the same items:
// (concordant - discordant) / (n choose 2).
template <typename Id>
double kendall_tau(const std::vector<Id>& a, const std::vector<Id>& b) {
  if (a.size() != b.size()) fail(ErrorKind::validation, "rankings cover different entity sets");
  const std::size_t n = a.size();
  if (n < 2) fail(ErrorKind::validation, "kendall tau needs at least 2 entities");
  std::unordered_map<Id, std::size_t> pos_b;
  for (std::size_t i = 0; i < n; ++i) pos_b.emplace(b[i], i);
  if (pos_b.size() != n) fail(ErrorKind::validation, "ranking repeats an entity");
  std::vector<std::size_t> perm(n);
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = pos_b.find(a[i]);
    if (it == pos_b.end() || used[it->second]) fail(ErrorKind::validation, "rankings cover different entity sets");
    used[it->second] = true;
    perm[i] = it->second;
  }
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (perm[i] < perm[j]) ++concordant;
      else ++discordant;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

}  // namespace ratewise
