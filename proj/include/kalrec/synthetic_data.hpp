#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"
#include "kalrec/kalman_tracker.hpp"
#include "kalrec/profile_builder.hpp"

namespace kalrec {

enum class Regime { SmoothDrift, RegimeChange, Bursty };

inline std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::SmoothDrift: return "smooth_drift";
    case Regime::RegimeChange: return "regime_change";
    case Regime::Bursty: return "bursty";
  }
  return "unknown";
}

inline Regime parse_regime(std::string_view name) {
  if (name == "smooth_drift") return Regime::SmoothDrift;
  if (name == "regime_change") return Regime::RegimeChange;
  if (name == "bursty") return Regime::Bursty;
  throw ValidationError("unknown regime '" + std::string(name) +
                        "' (expected smooth_drift, regime_change or bursty)");
}

/// 2008-09-01T00:00:00Z.
inline constexpr std::int64_t kDefaultStartTime = 1220227200;
inline constexpr std::int64_t kSecondsPerDay = 86400;

struct ScenarioConfig {
  Eigen::Index d = 44;
  std::size_t steps = 35;
  std::size_t n_users = 50;
  double q_true = 1e-3;
  double r_true = 1e-2;
  Regime regime = Regime::SmoothDrift;
  std::uint64_t seed = 7;
  double interval = 1.0;
  double alpha = 1.0;
  std::int64_t start_time = kDefaultStartTime;
  std::int64_t instant_spacing = kSecondsPerDay;

  void validate() const {
    detail::require(d >= 1, "scenario: d must be >= 1");
    detail::require(steps >= 2, "scenario: K must be >= 2");
    detail::require(n_users >= 1, "scenario: n_users must be >= 1");
    detail::require(std::isfinite(q_true) && q_true >= 0.0, "scenario: q_true must be >= 0");
    detail::require(std::isfinite(r_true) && r_true >= 0.0, "scenario: r_true must be >= 0");
    detail::require(instant_spacing > 0, "scenario: instant spacing must be > 0");
  }

  std::vector<std::int64_t> instants() const {
    std::vector<std::int64_t> out(steps);
    for (std::size_t k = 0; k < steps; ++k) out[k] = start_time + static_cast<std::int64_t>(k) * instant_spacing;
    return out;
  }
};

/// Ground truth and observations for one simulated user.
struct SimulatedUser {
  std::string user_id;
  std::vector<StateVector> states;  // X_0 .. X_{K-1}
  ProfileSeries observations;       // Z_0 .. Z_{K-1}
};

namespace detail {

/// SplitMix64 finaliser; decorrelates per-user streams derived from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string user_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%04zu", index);
  return buf;
}

// Regime knobs.
inline constexpr double kVelocityJumpSigma = 0.05;
inline constexpr double kBurstProbability = 0.05;
inline constexpr double kBurstScale = 0.1;

}  // namespace detail

/// Simulates X_{k+1} = A X_k + w_k, Z_k = H X_k + v_k for one user.
///
/// Initial positions are uniform on [0, 1], initial velocity and acceleration
/// Gaussian with sigma 0.01 * sqrt(q_true). w_k = sqrt(q_true) g n_k per axis
/// with g = (T^2/2, T, 1), the square root of the white-acceleration block.
/// A position that would go negative is held at 0 with its velocity and
/// acceleration floored at 0; observations are floored at 0 as well.
/// regime_change adds one N(0, 0.05^2) velocity jump per axis at K/2; bursty
/// adds a one-sided heavy-tailed spike to about 5% of observed entries.
inline SimulatedUser simulate_user(const ScenarioConfig& config, std::size_t index) {
  config.validate();
  std::mt19937_64 rng(detail::mix_seed(config.seed, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> heavy(2.0);

  const Eigen::Index d = config.d;
  const TrackingModel model(d, config.interval, config.alpha, 0.0, 1.0);
  const double t = config.interval;
  const Eigen::Vector3d g(0.5 * t * t, t, 1.0);
  const double q_sigma = std::sqrt(config.q_true);
  const double r_sigma = std::sqrt(config.r_true);
  const double kinematic_sigma = 0.01 * q_sigma;

  Eigen::VectorXd x(3 * d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = uniform(rng);
  for (Eigen::Index i = d; i < 3 * d; ++i) x[i] = kinematic_sigma * normal(rng);

  SimulatedUser user;
  user.user_id = detail::user_name(index);
  user.observations.user_id = user.user_id;
  user.observations.instants = config.instants();
  const std::size_t jump_step = config.steps / 2;

  for (std::size_t k = 0; k < config.steps; ++k) {
    if (config.regime == Regime::RegimeChange && k == jump_step) {
      for (Eigen::Index i = 0; i < d; ++i) x[d + i] += detail::kVelocityJumpSigma * normal(rng);
    }
    user.states.emplace_back(x);

    InterestVector z(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double value = x[i] + r_sigma * normal(rng);
      if (config.regime == Regime::Bursty && uniform(rng) < detail::kBurstProbability) {
        value += (detail::kBurstScale + 5.0 * r_sigma) * std::abs(heavy(rng));
      }
      z[i] = std::max(value, 0.0);
    }
    user.observations.profiles.push_back(std::move(z));

    x = model.A() * x;
    if (q_sigma > 0.0) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double n = q_sigma * normal(rng);
        x[i] += g[0] * n;
        x[d + i] += g[1] * n;
        x[2 * d + i] += g[2] * n;
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      if (x[i] < 0.0) {
        x[i] = 0.0;
        x[d + i] = std::max(x[d + i], 0.0);
        x[2 * d + i] = std::max(x[2 * d + i], 0.0);
      }
    }
  }
  return user;
}

inline SeriesMap generate_trajectories(const ScenarioConfig& config) {
  config.validate();
  SeriesMap out;
  for (std::size_t u = 0; u < config.n_users; ++u) {
    auto user = simulate_user(config, u);
    out.emplace(user.user_id, std::move(user.observations));
  }
  return out;
}

/// Watch events whose replay through build_series (decay 1) approximates the
/// given trajectories.
///
/// Interval k covers (instant_{k-1}, instant_k]; the first interval is taken to
/// be as long as the second, or one day for single-instant series. The
/// positive part of the profile increment over the interval is split into
/// programs_per_day * ceil(mass) single-genre events of equal watched
/// fraction (at most 1 / programs_per_day), with genres drawn by systematic
/// sampling proportional to the increment. Decreases cannot be replayed and
/// are dropped.
inline std::vector<WatchEvent> generate_events(const SeriesMap& trajectories, const ConceptSpace& space,
                                               std::size_t programs_per_day, std::uint64_t seed) {
  detail::require(programs_per_day >= 1, "generate_events: programs_per_day must be >= 1");
  std::vector<WatchEvent> events;
  std::size_t stream = 0;
  for (const auto& [user, series] : trajectories) {
    series.validate(space.dimension());
    std::mt19937_64 rng(detail::mix_seed(seed, stream++));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    InterestVector previous = space.zero();
    for (std::size_t k = 0; k < series.size(); ++k) {
      const InterestVector increment = (series.profiles[k] - previous).cwiseMax(0.0);
      previous = previous.cwiseMax(series.profiles[k]);
      const double mass = increment.sum();
      if (!(mass > 0.0)) continue;

      const std::int64_t end = series.instants[k];
      std::int64_t span = kSecondsPerDay;
      if (k > 0) {
        span = end - series.instants[k - 1];
      } else if (series.size() > 1) {
        span = series.instants[1] - series.instants[0];
      }
      const std::int64_t begin = end - span;

      const auto count = programs_per_day * static_cast<std::size_t>(std::ceil(mass));
      const double fraction = mass / static_cast<double>(count);
      double target = uniform(rng) * fraction;
      double cumulative = 0.0;
      Eigen::Index axis = 0;
      for (std::size_t e = 0; e < count; ++e, target += fraction) {
        while (axis + 1 < increment.size() && cumulative + increment[axis] <= target) {
          cumulative += increment[axis];
          ++axis;
        }
        while (increment[axis] == 0.0 && axis > 0) --axis;  // guard against rounding past the last nonzero axis
        WatchEvent ev;
        ev.user_id = user;
        ev.timestamp = begin + 1 + static_cast<std::int64_t>(uniform(rng) * static_cast<double>(span - 1));
        ev.timestamp = std::min(ev.timestamp, end);
        ev.genres = {space.label(axis)};
        ev.watched_fraction = fraction;
        events.push_back(std::move(ev));
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const WatchEvent& a, const WatchEvent& b) {
    return a.timestamp < b.timestamp;
  });
  return events;
}

}  // namespace kalrec
