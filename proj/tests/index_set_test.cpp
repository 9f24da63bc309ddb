#include "linqrl/index_set.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "linqrl/errors.hpp"
#include "linqrl/rng.hpp"

namespace linqrl {
namespace {

IndexSet make(std::initializer_list<std::int64_t> xs) {
  IndexSet set;
  for (auto x : xs) set.push_back(x);
  return set;
}

TEST(IndexSet, ConsecutiveIndicesCollapse) {
  const IndexSet set = make({1, 2, 3, 5, 6, 9});
  EXPECT_EQ(set.size(), 6);
  EXPECT_EQ(set.back(), 9);
  ASSERT_EQ(set.intervals().size(), 3u);
  EXPECT_EQ(set.intervals()[0], IndexSet::Interval(1, 3));
  EXPECT_EQ(set.intervals()[2], IndexSet::Interval(9, 9));
  EXPECT_EQ(set.to_vector(), (std::vector<std::int64_t>{1, 2, 3, 5, 6, 9}));
}

TEST(IndexSet, ContainsChecksIntervals) {
  const IndexSet set = make({2, 3, 7});
  for (std::int64_t i : {2, 3, 7}) EXPECT_TRUE(set.contains(i));
  for (std::int64_t i : {0, 1, 4, 6, 8}) EXPECT_FALSE(set.contains(i));
  EXPECT_FALSE(IndexSet().contains(1));
}

TEST(IndexSet, RejectsNonIncreasingAppend) {
  IndexSet set = make({4});
  EXPECT_THROW(set.push_back(4), UsageError);
  EXPECT_THROW(set.push_back(2), UsageError);
  EXPECT_EQ(set.size(), 1);
}

TEST(IndexSet, EmptySetIsSubsetOfEverything) {
  EXPECT_TRUE(IndexSet().subset_of(IndexSet()));
  EXPECT_TRUE(IndexSet().subset_of(make({1})));
  EXPECT_FALSE(make({1}).subset_of(IndexSet()));
  EXPECT_EQ(IndexSet().count_not_in(make({1, 2, 5})), 3);
}

TEST(IndexSet, SubsetAndDifferenceMatchStdSet) {
  // Oracle: the same sets held in std::set.
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    IndexSet big, small;
    std::set<std::int64_t> big_ref, small_ref;
    const double keep = rng.uniform();
    for (std::int64_t i = 1; i <= 60; ++i) {
      if (rng.uniform() < 0.7) {
        big.push_back(i);
        big_ref.insert(i);
        if (rng.uniform() < keep) {
          small.push_back(i);
          small_ref.insert(i);
        }
      } else if (trial % 3 == 0 && rng.uniform() < 0.1) {
        small.push_back(i);  // element outside big
        small_ref.insert(i);
      }
    }
    const bool ref_subset = std::includes(big_ref.begin(), big_ref.end(), small_ref.begin(), small_ref.end());
    ASSERT_EQ(small.subset_of(big), ref_subset);
    std::int64_t ref_diff = 0;
    for (auto x : big_ref) ref_diff += small_ref.count(x) == 0 ? 1 : 0;
    ASSERT_EQ(small.count_not_in(big), ref_diff);
  }
}

}  // namespace
}  // namespace linqrl
