#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ratewise/core_data.hpp"
#include "ratewise/error.hpp"

namespace ratewise {

// Ranks are 1-based throughout, matching what the analyst sees.
struct DragEvent {
  EntityId entity_id;
  std::size_t from_rank = 0;
  std::size_t to_rank = 0;
  std::vector<EntityId> base_ranking;

  bool operator==(const DragEvent&) const = default;
};

enum class SchemeKind { default_, local, global, type };

inline std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::default_: return "default";
    case SchemeKind::local: return "local";
    case SchemeKind::global: return "global";
    case SchemeKind::type: return "type";
  }
  return "default";
}

inline SchemeKind scheme_kind_from_string(std::string_view s) {
  if (s == "default") return SchemeKind::default_;
  if (s == "local") return SchemeKind::local;
  if (s == "global") return SchemeKind::global;
  if (s == "type") return SchemeKind::type;
  fail(ErrorKind::validation, "unknown scheme kind '" + std::string(s) + "'");
}

// Which side of the dragged entity a training pair samples.
enum class SampleRole { positive, negative, none };

inline std::string_view to_string(SampleRole role) {
  switch (role) {
    case SampleRole::positive: return "positive";
    case SampleRole::negative: return "negative";
    case SampleRole::none: return "none";
  }
  return "none";
}

struct TrainingPair {
  std::vector<double> diff;  // normalized(left) - normalized(right)
  int label = 1;             // +1 iff left is preferred over right
  EntityId left_id;
  EntityId right_id;
  SampleRole role = SampleRole::none;

  bool operator==(const TrainingPair&) const = default;
};

struct ConstraintSet {
  SchemeKind scheme = SchemeKind::local;
  std::vector<TrainingPair> pairs;                           // local, global
  std::map<std::string, std::vector<TrainingPair>> by_type;  // type
  std::vector<std::string> warnings;
  DragEvent source;

  std::size_t pair_count() const {
    std::size_t total = pairs.size();
    for (const auto& [label, ps] : by_type) total += ps.size();
    return total;
  }

  bool operator==(const ConstraintSet&) const = default;
};

// Checks a drag against the dataset: base ranking must be a permutation of
// the dataset ids, the entity must be present at from_rank, and to_rank must
// lie in 1..n.
inline void validate_drag(const DragEvent& drag, const Dataset& ds) {
  const std::size_t n = ds.size();
  if (n < 2) fail(ErrorKind::validation, "insufficient entities");
  if (!ds.find(drag.entity_id)) fail(ErrorKind::not_found, "unknown entity '" + drag.entity_id + "'");
  if (drag.base_ranking.size() != n) fail(ErrorKind::validation, "base ranking does not cover the dataset");
  std::vector<bool> seen(n, false);
  for (const auto& id : drag.base_ranking) {
    auto idx = ds.find(id);
    if (!idx) fail(ErrorKind::validation, "base ranking references unknown entity '" + id + "'");
    if (seen[*idx]) fail(ErrorKind::validation, "base ranking repeats entity '" + id + "'");
    seen[*idx] = true;
  }
  auto pos = std::find(drag.base_ranking.begin(), drag.base_ranking.end(), drag.entity_id);
  const auto actual_from = static_cast<std::size_t>(pos - drag.base_ranking.begin()) + 1;
  if (drag.from_rank != actual_from) {
    fail(ErrorKind::validation, "fromRank " + std::to_string(drag.from_rank) + " does not match position " +
                                    std::to_string(actual_from) + " of '" + drag.entity_id + "'");
  }
  if (drag.to_rank < 1 || drag.to_rank > n) {
    fail(ErrorKind::validation, "toRank " + std::to_string(drag.to_rank) + " outside 1.." + std::to_string(n));
  }
}

inline std::vector<EntityId> post_drag_ranking(const DragEvent& drag) {
  std::vector<EntityId> out = drag.base_ranking;
  auto it = std::find(out.begin(), out.end(), drag.entity_id);
  if (it == out.end()) fail(ErrorKind::not_found, "unknown entity '" + drag.entity_id + "'");
  out.erase(it);
  const std::size_t at = std::min(drag.to_rank, out.size() + 1) - 1;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), drag.entity_id);
  return out;
}

// Largest-remainder apportionment of `budget` seats over `counts`.
// Ties on the remainder go to the larger count, then to the earlier entry.
// Requires budget <= sum(counts); no entry receives more than its count.
inline std::vector<std::size_t> allocate_largest_remainder(std::span<const std::size_t> counts,
                                                           std::size_t budget) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> seats(counts.size(), 0);
  if (total == 0 || budget == 0) return seats;
  budget = std::min(budget, total);
  std::vector<std::size_t> rem(counts.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    seats[i] = budget * counts[i] / total;
    rem[i] = budget * counts[i] % total;
    assigned += seats[i];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return counts[a] > counts[b];
  });
  for (std::size_t k = 0; assigned < budget; ++k, ++assigned) ++seats[order[k % order.size()]];
  return seats;
}

namespace detail {

class PairBuilder {
 public:
  PairBuilder(const Dataset& ds, const NormalizedMatrix& nm, const std::vector<EntityId>& post,
              const EntityId& dragged)
      : ds_(ds), nm_(nm), dragged_(dragged) {
    for (std::size_t r = 0; r < post.size(); ++r) rank_.emplace(post[r], r + 1);
    dragged_rank_ = rank_.at(dragged);
  }

  std::size_t rank(const EntityId& id) const { return rank_.at(id); }

  // Role of a single non-dragged entity.
  SampleRole side(const EntityId& id) const {
    if (id == dragged_) return SampleRole::none;
    return rank(id) < dragged_rank_ ? SampleRole::positive : SampleRole::negative;
  }

  SampleRole role(const EntityId& a, const EntityId& b) const {
    if (a == dragged_) return side(b);
    if (b == dragged_) return side(a);
    const auto sa = side(a);
    return sa == side(b) ? sa : SampleRole::none;
  }

  TrainingPair make(const EntityId& left, const EntityId& right, int label) const {
    TrainingPair p;
    const auto l = nm_.row(ds_.index_of(left));
    const auto r = nm_.row(ds_.index_of(right));
    p.diff.resize(l.size());
    for (std::size_t j = 0; j < l.size(); ++j) p.diff[j] = l[j] - r[j];
    p.label = label;
    p.left_id = left;
    p.right_id = right;
    p.role = role(left, right);
    return p;
  }

  // Pair plus its mirror (negated diff and label).
  void emit_mirrored(std::vector<TrainingPair>& out, const EntityId& left, const EntityId& right,
                     int label) const {
    out.push_back(make(left, right, label));
    out.push_back(make(right, left, -label));
  }

 private:
  const Dataset& ds_;
  const NormalizedMatrix& nm_;
  EntityId dragged_;
  std::size_t dragged_rank_ = 0;
  std::unordered_map<EntityId, std::size_t> rank_;
};

}  // namespace detail

// Local scheme: the dragged entity and its 5 nearest post-drag neighbours
// (two above, three below, shifted to stay inside the list) form the marked
// set; every ordered pair over it becomes a training instance.
inline ConstraintSet derive_local(const DragEvent& drag, const Dataset& ds, const NormalizedMatrix& nm) {
  if (ds.size() < 2) fail(ErrorKind::validation, "insufficient entities");
  validate_drag(drag, ds);
  const auto post = post_drag_ranking(drag);
  const std::size_t n = post.size();
  const std::size_t window = std::min<std::size_t>(6, n);
  const std::size_t k = drag.to_rank;
  // 1-based start of the window, centred so that k sits third from the top
  std::size_t start = k > 2 ? k - 2 : 1;
  start = std::min(start, n - window + 1);

  detail::PairBuilder builder(ds, nm, post, drag.entity_id);
  ConstraintSet cs;
  cs.scheme = SchemeKind::local;
  cs.source = drag;
  for (std::size_t a = start; a < start + window; ++a) {
    for (std::size_t b = start; b < start + window; ++b) {
      if (a == b) continue;
      cs.pairs.push_back(builder.make(post[a - 1], post[b - 1], a < b ? 1 : -1));
    }
  }
  return cs;
}

namespace detail {

// Samples min(6, |segment|) entities from a contiguous rank segment,
// proportionally to type frequencies, preferring rank proximity to the drop
// position. `segment` is ordered nearest-to-k first.
inline std::vector<EntityId> sample_segment(const std::vector<EntityId>& segment, const Dataset& ds) {
  const std::size_t budget = std::min<std::size_t>(6, segment.size());
  std::map<std::string, std::vector<EntityId>> members;  // nearest first
  for (const auto& id : segment) members[ds.entity(id).type_label].push_back(id);
  std::vector<std::size_t> counts;
  for (const auto& [label, ids] : members) counts.push_back(ids.size());
  const auto seats = allocate_largest_remainder(counts, budget);

  std::vector<EntityId> picked;
  std::size_t t = 0;
  for (const auto& [label, ids] : members) {
    // evenly spaced over the type's members in the segment
    const std::size_t take = seats[t++];
    for (std::size_t i = 0; i < take; ++i) picked.push_back(ids[(2 * i + 1) * ids.size() / (2 * take)]);
  }
  return picked;
}

}  // namespace detail

// Global scheme: pair the dragged entity with type-proportional samples from
// above (preferred, +1) and below (-1) its drop position.
inline ConstraintSet derive_global(const DragEvent& drag, const Dataset& ds, const NormalizedMatrix& nm) {
  validate_drag(drag, ds);
  const auto post = post_drag_ranking(drag);
  const std::size_t k = drag.to_rank;
  detail::PairBuilder builder(ds, nm, post, drag.entity_id);

  std::vector<EntityId> above(post.begin(), post.begin() + static_cast<std::ptrdiff_t>(k - 1));
  std::reverse(above.begin(), above.end());
  std::vector<EntityId> below(post.begin() + static_cast<std::ptrdiff_t>(k), post.end());

  auto by_rank = [&](std::vector<EntityId> ids) {
    std::sort(ids.begin(), ids.end(),
              [&](const EntityId& a, const EntityId& b) { return builder.rank(a) < builder.rank(b); });
    return ids;
  };

  ConstraintSet cs;
  cs.scheme = SchemeKind::global;
  cs.source = drag;
  for (const auto& q : by_rank(detail::sample_segment(above, ds))) {
    builder.emit_mirrored(cs.pairs, q, drag.entity_id, 1);
  }
  for (const auto& p : by_rank(detail::sample_segment(below, ds))) {
    builder.emit_mirrored(cs.pairs, p, drag.entity_id, -1);
  }
  return cs;
}

// 1-based window [first, last] of positions used for adjacent-pair
// constraints in a per-type ranking of `length` entities around `centre`.
inline std::pair<std::size_t, std::size_t> type_window(std::size_t length, std::size_t centre) {
  const std::size_t span = std::min<std::size_t>(7, length);
  centre = std::clamp<std::size_t>(centre, 1, length);
  std::size_t first = centre > 3 ? centre - 3 : 1;
  first = std::min(first, length - span + 1);
  return {first, first + span - 1};
}

// Type scheme: within each type's sub-ranking, adjacent-pair constraints in
// a 3-above / 3-below window around the drop position.
inline ConstraintSet derive_type(const DragEvent& drag, const Dataset& ds, const NormalizedMatrix& nm) {
  validate_drag(drag, ds);
  const auto post = post_drag_ranking(drag);
  const std::size_t k = drag.to_rank;
  detail::PairBuilder builder(ds, nm, post, drag.entity_id);

  std::map<std::string, std::vector<EntityId>> per_type;
  for (const auto& id : post) per_type[ds.entity(id).type_label].push_back(id);

  ConstraintSet cs;
  cs.scheme = SchemeKind::type;
  cs.source = drag;
  for (const auto& [label, ranking] : per_type) {
    if (ranking.size() < 2) {
      cs.warnings.push_back("type '" + label + "' skipped: fewer than 2 entities");
      continue;
    }
    // Own type: the dragged entity's position. Other types: the first entity
    // ranked below the drop position.
    std::size_t centre = 1;
    while (centre <= ranking.size() && builder.rank(ranking[centre - 1]) < k) ++centre;
    const auto [first, last] = type_window(ranking.size(), centre);
    auto& out = cs.by_type[label];
    for (std::size_t t = first; t < last; ++t) {
      builder.emit_mirrored(out, ranking[t - 1], ranking[t], 1);
    }
  }
  if (cs.by_type.empty()) fail(ErrorKind::validation, "no trainable type");
  return cs;
}

inline ConstraintSet derive(SchemeKind kind, const DragEvent& drag, const Dataset& ds, const NormalizedMatrix& nm) {
  switch (kind) {
    case SchemeKind::local: return derive_local(drag, ds, nm);
    case SchemeKind::global: return derive_global(drag, ds, nm);
    case SchemeKind::type: return derive_type(drag, ds, nm);
    case SchemeKind::default_: break;
  }
  fail(ErrorKind::validation, "the default scheme has no constraints");
}

}  // namespace ratewise
