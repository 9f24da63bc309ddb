#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace linqrl {

// Strictly increasing set of 1-based path indices stored as closed
// intervals. Appends must exceed the current maximum, so consecutive paths
// collapse into a single interval.
class IndexSet {
 public:
  using Interval = std::pair<std::int64_t, std::int64_t>;

  void push_back(std::int64_t index);

  std::int64_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::int64_t back() const noexcept { return intervals_.empty() ? 0 : intervals_.back().second; }
  bool contains(std::int64_t index) const;
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }

  // Every element of *this is an element of other.
  bool subset_of(const IndexSet& other) const;
  // |other \ *this|.
  std::int64_t count_not_in(const IndexSet& other) const;
  std::vector<std::int64_t> to_vector() const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<Interval> intervals_;
  std::int64_t size_ = 0;
};

}  // namespace linqrl
