#include "linqrl/index_set.hpp"

#include <algorithm>

#include "linqrl/errors.hpp"

namespace linqrl {

void IndexSet::push_back(std::int64_t index) {
  if (index <= back()) throw UsageError("IndexSet: indices must be appended in increasing order");
  if (!intervals_.empty() && intervals_.back().second + 1 == index) {
    intervals_.back().second = index;
  } else {
    intervals_.emplace_back(index, index);
  }
  ++size_;
}

bool IndexSet::contains(std::int64_t index) const {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), index,
                             [](std::int64_t v, const Interval& iv) { return v < iv.first; });
  if (it == intervals_.begin()) return false;
  --it;
  return index <= it->second;
}

std::int64_t IndexSet::count_not_in(const IndexSet& other) const {
  // Size of other minus |other ∩ this| via a merge over both interval lists.
  std::int64_t common = 0;
  auto a = intervals_.begin();
  auto b = other.intervals_.begin();
  while (a != intervals_.end() && b != other.intervals_.end()) {
    const std::int64_t lo = std::max(a->first, b->first);
    const std::int64_t hi = std::min(a->second, b->second);
    if (lo <= hi) common += hi - lo + 1;
    if (a->second < b->second) {
      ++a;
    } else {
      ++b;
    }
  }
  return other.size_ - common;
}

bool IndexSet::subset_of(const IndexSet& other) const {
  const std::int64_t common = other.size_ - count_not_in(other);
  return common == size_;
}

std::vector<std::int64_t> IndexSet::to_vector() const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(size_));
  for (const auto& [lo, hi] : intervals_) {
    for (std::int64_t i = lo; i <= hi; ++i) out.push_back(i);
  }
  return out;
}

}  // namespace linqrl
