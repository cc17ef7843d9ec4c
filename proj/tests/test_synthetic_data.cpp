#include <gtest/gtest.h>

#include <set>

#include "kalrec/evaluation.hpp"
#include "kalrec/kalman_tracker.hpp"
#include "kalrec/synthetic_data.hpp"

using namespace kalrec;

namespace {

ConceptSpace genre_space(Eigen::Index d) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < d; ++i) labels.push_back("g" + std::to_string(i));
  return ConceptSpace(labels);
}

ScenarioConfig small(Regime regime = Regime::SmoothDrift) {
  ScenarioConfig c;
  c.d = 6;
  c.steps = 20;
  c.n_users = 5;
  c.regime = regime;
  c.seed = 99;
  return c;
}

}  // namespace

TEST(GenerateTrajectories, NoiseFreeIsConstant) {
  auto c = small();
  c.q_true = 0.0;
  c.r_true = 0.0;
  for (const auto& [user, s] : generate_trajectories(c)) {
    for (const auto& p : s.profiles) EXPECT_EQ(p, s.profiles.front()) << user;
  }
}

TEST(GenerateTrajectories, SameSeedSameOutput) {
  const auto a = generate_trajectories(small(Regime::Bursty));
  const auto b = generate_trajectories(small(Regime::Bursty));
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [user, s] : a) {
    EXPECT_EQ(s.profiles, b.at(user).profiles);
    EXPECT_EQ(s.instants, b.at(user).instants);
  }
  auto other = small(Regime::Bursty);
  other.seed = 100;
  EXPECT_NE(generate_trajectories(other).begin()->second.profiles, a.begin()->second.profiles);
}

TEST(GenerateTrajectories, PerUserStreamsAreIndependentOfUserCount) {
  auto c = small();
  const auto all = generate_trajectories(c);
  const auto third = simulate_user(c, 2);
  EXPECT_EQ(all.at(third.user_id).profiles, third.observations.profiles);
  c.n_users = 3;
  EXPECT_EQ(generate_trajectories(c).at(third.user_id).profiles, third.observations.profiles);
}

TEST(GenerateTrajectories, ShapeAndNonnegativity) {
  for (auto regime : {Regime::SmoothDrift, Regime::RegimeChange, Regime::Bursty}) {
    auto c = small(regime);
    c.q_true = 0.01;
    c.r_true = 0.05;
    for (std::size_t u = 0; u < c.n_users; ++u) {
      const auto user = simulate_user(c, u);
      ASSERT_EQ(user.states.size(), c.steps);
      ASSERT_EQ(user.observations.size(), c.steps);
      user.observations.validate(c.d);
      for (const auto& x : user.states) EXPECT_GE(x.position().minCoeff(), 0.0);
      for (const auto& z : user.observations.profiles) EXPECT_GE(z.minCoeff(), 0.0);
    }
  }
}

TEST(GenerateTrajectories, RegimeChangeInjectsVelocityJump) {
  auto c = small(Regime::RegimeChange);
  c.q_true = 0.0;
  c.r_true = 0.0;
  const auto user = simulate_user(c, 0);
  const std::size_t jump = c.steps / 2;
  EXPECT_TRUE(user.states[jump - 1].velocity().isZero());
  EXPECT_FALSE(user.states[jump].velocity().isZero());
}

TEST(GenerateTrajectories, BurstyAddsSpikes) {
  auto c = small(Regime::Bursty);
  c.q_true = 0.0;
  c.r_true = 0.0;
  std::size_t spikes = 0;
  for (std::size_t u = 0; u < c.n_users; ++u) {
    const auto user = simulate_user(c, u);
    for (std::size_t k = 0; k < c.steps; ++k) {
      spikes += ((user.observations.profiles[k] - user.states[k].position()).array() > 0.0).count();
    }
  }
  EXPECT_GT(spikes, 0u);
}

TEST(GenerateTrajectories, RejectsInvalidConfig) {
  auto c = small();
  c.steps = 1;
  EXPECT_THROW(generate_trajectories(c), ValidationError);
  EXPECT_THROW(parse_regime("wobbly"), ValidationError);
  EXPECT_EQ(parse_regime(regime_name(Regime::RegimeChange)), Regime::RegimeChange);
}

TEST(GenerateTrajectories, NoiseFreeTrackingHasZeroInnovation) {
  auto c = small();
  c.q_true = 0.0;
  c.r_true = 0.0;
  const auto model = build_model(c.d, c.interval, c.alpha, 1e-4, 1e-2);
  for (std::size_t u = 0; u < c.n_users; ++u) {
    const auto user = simulate_user(c, u);
    const auto rec = track_from_state(model, user.observations, user.states.front());
    for (const auto& s : rec.steps) EXPECT_LT(s.innovation.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(GenerateEvents, SingleGenreTrajectory) {
  const auto space = genre_space(3);
  ProfileSeries s;
  s.user_id = "solo";
  s.instants = {100000, 200000, 300000};
  s.profiles = {(InterestVector(3) << 0, 1, 0).finished(), (InterestVector(3) << 0, 2.5, 0).finished(),
                (InterestVector(3) << 0, 2.5, 0).finished()};
  const auto events = generate_events(SeriesMap{{"solo", s}}, space, 4, 1);
  ASSERT_FALSE(events.empty());
  for (const auto& e : events) {
    EXPECT_EQ(e.genres, std::vector<std::string>{"g1"});
    EXPECT_LE(e.watched_fraction, 0.25);
  }
  const auto rebuilt = build_series(events, space, s.instants).at("solo");
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(rebuilt.profiles[k][1], s.profiles[k][1], 1e-12);
}

TEST(GenerateEvents, EmptyInputGivesEmptyLog) {
  EXPECT_TRUE(generate_events(SeriesMap{}, genre_space(2), 5, 1).empty());
}

TEST(GenerateEvents, RoundTripStaysWithinCosineBound) {
  const auto space = genre_space(44);
  ScenarioConfig c;
  c.n_users = 10;
  const auto trajectories = generate_trajectories(c);
  const auto events = generate_events(trajectories, space, 10, 3);
  const auto rebuilt = build_series(events, space, c.instants());
  ASSERT_EQ(rebuilt.size(), trajectories.size());
  for (const auto& [user, s] : trajectories) {
    const auto& r = rebuilt.at(user);
    ASSERT_EQ(r.size(), s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_LT(cosine_distance(r.profiles[k], s.profiles[k]), 0.2) << user << " step " << k;
    }
  }
}

TEST(GenerateEvents, EventsStayInsideTheirInterval) {
  const auto space = genre_space(6);
  auto c = small();
  const auto trajectories = generate_trajectories(c);
  const auto instants = c.instants();
  for (const auto& e : generate_events(trajectories, space, 3, 5)) {
    EXPECT_GT(e.timestamp, instants.front() - c.instant_spacing);
    EXPECT_LE(e.timestamp, instants.back());
  }
}
