#include <gtest/gtest.h>

#include "kalrec/recommender.hpp"

using namespace kalrec;

namespace {

std::vector<ConceptDelta> positives(const std::vector<double>& deltas) {
  std::vector<ConceptDelta> out;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double d = deltas[i];
    out.push_back({static_cast<Eigen::Index>(i), d,
                   d > 0 ? DeltaClass::Positive : (d < 0 ? DeltaClass::Negative : DeltaClass::Neutral)});
  }
  return out;
}

}  // namespace

TEST(ConceptDeltas, EqualProfilesAreNeutral) {
  const InterestVector p = (InterestVector(3) << 0.2, 1.0, 3.0).finished();
  for (const auto& cd : concept_deltas(p, p, 0.05)) {
    EXPECT_EQ(cd.delta, 0.0);
    EXPECT_EQ(cd.classification, DeltaClass::Neutral);
  }
}

TEST(ConceptDeltas, ClassifiesBySign) {
  const auto out = concept_deltas((InterestVector(2) << 2, 0).finished(), (InterestVector(2) << 1, 1).finished(), 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].delta, 1.0);
  EXPECT_EQ(out[0].classification, DeltaClass::Positive);
  EXPECT_EQ(out[1].delta, -1.0);
  EXPECT_EQ(out[1].classification, DeltaClass::Negative);
}

TEST(ConceptDeltas, ThresholdIsInclusive) {
  const auto out = concept_deltas((InterestVector(2) << 0.5, 0).finished(), (InterestVector(2) << 0, 0.5).finished(), 0.5);
  EXPECT_EQ(out[0].classification, DeltaClass::Positive);
  EXPECT_EQ(out[1].classification, DeltaClass::Negative);
}

TEST(ConceptDeltas, LargeThresholdMakesEverythingNeutral) {
  for (const auto& cd : concept_deltas((InterestVector(3) << 3, -2, 1).finished(), InterestVector::Zero(3), 10.0)) {
    EXPECT_EQ(cd.classification, DeltaClass::Neutral);
  }
}

TEST(ConceptDeltas, RejectsMismatchAndBadThreshold) {
  EXPECT_THROW(concept_deltas(InterestVector::Zero(2), InterestVector::Zero(3), 0.1), ValidationError);
  EXPECT_THROW(concept_deltas(InterestVector::Zero(2), InterestVector::Zero(2), 0.0), ValidationError);
}

TEST(Recommend, SameDayRefinementConcentratesOnRemainingGenre) {
  const ConceptSpace space({"x", "y", "z", "alpha", "beta"});
  const auto deltas = positives({0.3, 0.2, 0.1, -0.2, -0.4});
  const auto rec = recommend(deltas, {"x", "y"}, space);
  EXPECT_EQ(rec.promoted, (std::vector<std::string>{"z"}));
  EXPECT_EQ(rec.excluded_watched, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(rec.demoted, (std::vector<std::string>{"beta", "alpha"}));
}

TEST(Recommend, AbstainsWithoutPositives) {
  const ConceptSpace space({"a", "b"});
  const auto rec = recommend(positives({0.0, -1.0}), {}, space);
  EXPECT_TRUE(rec.promoted.empty());
  EXPECT_EQ(rec.demoted, (std::vector<std::string>{"b"}));
}

TEST(Recommend, OrdersByDescendingDelta) {
  const ConceptSpace space({"b", "a"});
  const auto rec = recommend(positives({1.0, 2.0}), {}, space);
  EXPECT_EQ(rec.promoted, (std::vector<std::string>{"a", "b"}));
}

TEST(Recommend, TiesKeepAxisOrder) {
  const ConceptSpace space({"c", "a", "b"});
  const auto rec = recommend(positives({0.5, 0.5, 0.5}), {}, space);
  EXPECT_EQ(rec.promoted, (std::vector<std::string>{"c", "a", "b"}));
}

TEST(Recommend, UnknownWatchedLabelIsAnError) {
  const ConceptSpace space({"a"});
  EXPECT_THROW(recommend(positives({1.0}), {"zzz"}, space), ValidationError);
}

TEST(FilterCatalog, KeepsPromotedAndDropsDemoted) {
  Recommendation rec;
  rec.promoted = {"Drama"};
  rec.demoted = {"Talkshow"};
  const std::vector<Program> catalog{{"p1", {"Drama"}},
                                     {"p2", {"Drama", "Talkshow"}},
                                     {"p3", {"Documentary"}},
                                     {"p4", {"Documentary", "Drama"}}};
  const auto kept = filter_catalog(catalog, rec);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "p1");
  EXPECT_EQ(kept[1].id, "p4");
}
