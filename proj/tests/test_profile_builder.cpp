#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "kalrec/profile_builder.hpp"

using namespace kalrec;

namespace {

ConceptSpace tv_space() { return ConceptSpace({"Documentary", "Drama", "Entertainment", "Talkshow"}); }

WatchEvent event(std::string user, std::int64_t t, std::vector<std::string> genres, double fraction) {
  return WatchEvent{std::move(user), t, std::move(genres), fraction};
}

}  // namespace

TEST(InterestUpdate, FullViewFromEmptyProfile) {
  const auto space = tv_space();
  const auto p = interest_update(space, space.zero(), event("a", 0, {"Drama"}, 1.0), 1.0);
  EXPECT_EQ(p, (InterestVector(4) << 0, 1, 0, 0).finished());
}

TEST(InterestUpdate, HalfViewSplitAcrossTwoGenres) {
  const auto space = tv_space();
  const auto p = interest_update(space, space.zero(), event("a", 0, {"Drama", "Entertainment"}, 0.5), 1.0);
  EXPECT_EQ(p, (InterestVector(4) << 0, 0.25, 0.25, 0).finished());
}

TEST(InterestUpdate, NullEventLeavesProfileUnchanged) {
  const auto space = tv_space();
  const InterestVector start = (InterestVector(4) << 0.3, 1.2, 0, 4).finished();
  EXPECT_EQ(interest_update(space, start, event("a", 0, {"Talkshow"}, 0.0), 1.0), start);
}

TEST(InterestUpdate, DecayScalesEveryAxis) {
  const auto space = tv_space();
  const InterestVector start = (InterestVector(4) << 1, 2, 0, 4).finished();
  const auto p = interest_update(space, start, event("a", 0, {"Entertainment"}, 1.0), 0.5);
  EXPECT_EQ(p, (InterestVector(4) << 0.5, 1, 1, 2).finished());
}

TEST(InterestUpdate, UnknownGenreNamesLabelAndEvent) {
  const auto space = tv_space();
  try {
    interest_update(space, space.zero(), event("alice", 42, {"Western"}, 1.0), 1.0);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("Western"), std::string::npos);
    EXPECT_NE(what.find("alice"), std::string::npos);
  }
}

TEST(InterestUpdate, RejectsBadFractionAndDecay) {
  const auto space = tv_space();
  EXPECT_THROW(interest_update(space, space.zero(), event("a", 0, {"Drama"}, 1.5), 1.0), ValidationError);
  EXPECT_THROW(interest_update(space, space.zero(), event("a", 0, {"Drama"}, 0.5), 1.5), ValidationError);
  EXPECT_THROW(interest_update(space, space.zero(), event("a", 0, {}, 0.5), 1.0), ValidationError);
  EXPECT_THROW(interest_update(space, space.zero(), event("a", 0, {"Drama", "Drama"}, 0.5), 1.0),
               ValidationError);
}

TEST(BuildSeries, SingleEventIsHeldAcrossInstants) {
  const auto space = tv_space();
  const std::vector<WatchEvent> events{event("a", 5, {"Drama"}, 1.0)};
  const auto series = build_series(events, space, std::vector<std::int64_t>{10, 20});
  ASSERT_EQ(series.size(), 1u);
  const auto& s = series.at("a");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.profiles[0], (InterestVector(4) << 0, 1, 0, 0).finished());
  EXPECT_EQ(s.profiles[1], s.profiles[0]);
}

TEST(BuildSeries, NoEventsGivesEmptyMap) {
  const auto space = tv_space();
  EXPECT_TRUE(build_series(std::vector<WatchEvent>{}, space, std::vector<std::int64_t>{1, 2}).empty());
}

TEST(BuildSeries, EmptyInstantsRejected) {
  const auto space = tv_space();
  EXPECT_THROW(build_series(std::vector<WatchEvent>{}, space, std::vector<std::int64_t>{}), ValidationError);
  EXPECT_THROW(build_series(std::vector<WatchEvent>{}, space, std::vector<std::int64_t>{3, 3}), ValidationError);
}

TEST(BuildSeries, BoundaryEventIsInclusive) {
  const auto space = tv_space();
  const std::vector<WatchEvent> events{event("a", 10, {"Drama"}, 1.0), event("a", 11, {"Talkshow"}, 1.0)};
  const auto s = build_series(events, space, std::vector<std::int64_t>{10, 11}).at("a");
  EXPECT_EQ(s.profiles[0], (InterestVector(4) << 0, 1, 0, 0).finished());
  EXPECT_EQ(s.profiles[1], (InterestVector(4) << 0, 1, 0, 1).finished());
}

TEST(BuildSeries, SeriesStartsAtFirstInstantAfterFirstEvent) {
  const auto space = tv_space();
  const std::vector<WatchEvent> events{event("late", 25, {"Drama"}, 1.0), event("never", 99, {"Drama"}, 1.0)};
  const auto series = build_series(events, space, std::vector<std::int64_t>{10, 20, 30, 40});
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series.at("late").instants, (std::vector<std::int64_t>{30, 40}));
}

TEST(BuildSeries, InterleavedUsersMatchPerUserRuns) {
  const auto space = tv_space();
  const std::vector<WatchEvent> a{event("a", 1, {"Drama"}, 1.0), event("a", 4, {"Talkshow", "Drama"}, 0.5),
                                  event("a", 9, {"Documentary"}, 0.25)};
  const std::vector<WatchEvent> b{event("b", 2, {"Entertainment"}, 0.75), event("b", 3, {"Drama"}, 1.0),
                                  event("b", 8, {"Entertainment"}, 1.0)};
  const std::vector<WatchEvent> merged{a[0], b[0], b[1], a[1], b[2], a[2]};
  const std::vector<std::int64_t> instants{3, 6, 9};
  const BuildOptions opts{0.9, false};

  const auto both = build_series(merged, space, instants, opts);
  const auto only_a = build_series(a, space, instants, opts);
  const auto only_b = build_series(b, space, instants, opts);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both.at("a").profiles, only_a.at("a").profiles);
  EXPECT_EQ(both.at("b").profiles, only_b.at("b").profiles);
}

TEST(BuildSeries, NormalizeScalesPeakToOne) {
  const auto space = tv_space();
  const std::vector<WatchEvent> events{event("a", 1, {"Drama"}, 1.0), event("a", 2, {"Talkshow"}, 0.5)};
  const auto s = build_series(events, space, std::vector<std::int64_t>{5}, BuildOptions{1.0, true}).at("a");
  EXPECT_EQ(s.profiles[0], (InterestVector(4) << 0, 1, 0, 0.5).finished());
}
