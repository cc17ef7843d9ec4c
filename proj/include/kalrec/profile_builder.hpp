#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"

namespace kalrec {

/// One viewing of a program by a user.
struct WatchEvent {
  std::string user_id;
  std::int64_t timestamp = 0;  // epoch seconds
  std::vector<std::string> genres;
  double watched_fraction = 0.0;  // in [0, 1]

  friend bool operator==(const WatchEvent&, const WatchEvent&) = default;
};

/// Interest profiles of one user, sampled at strictly increasing instants.
struct ProfileSeries {
  std::string user_id;
  std::vector<std::int64_t> instants;
  std::vector<InterestVector> profiles;

  std::size_t size() const { return profiles.size(); }

  void validate(Eigen::Index dimension) const {
    detail::require(!profiles.empty(), "profile series of '" + user_id + "' is empty");
    detail::require(instants.size() == profiles.size(),
                    "profile series of '" + user_id + "' has mismatched instants and profiles");
    for (std::size_t k = 1; k < instants.size(); ++k) {
      detail::require(instants[k - 1] < instants[k],
                      "profile series of '" + user_id + "' instants are not strictly increasing");
    }
    for (const auto& p : profiles) {
      detail::require(p.size() == dimension, "profile series of '" + user_id +
                                                 "' has a profile of dimension " +
                                                 std::to_string(p.size()) + ", expected " +
                                                 std::to_string(dimension));
      detail::require(p.allFinite(), "profile series of '" + user_id + "' has a non-finite score");
    }
  }
};

using SeriesMap = std::map<std::string, ProfileSeries>;

namespace detail {

inline std::string describe(const WatchEvent& event) {
  return "event(user='" + event.user_id + "', t=" + std::to_string(event.timestamp) + ")";
}

inline void validate_event(const WatchEvent& event) {
  require(!event.genres.empty(), describe(event) + " has no genres");
  require(std::isfinite(event.watched_fraction) && event.watched_fraction >= 0.0 &&
              event.watched_fraction <= 1.0,
          describe(event) + " watched_fraction outside [0, 1]");
}

}  // namespace detail

/// Folds one watch event into a profile: every axis decays by `decay`, then
/// each of the program's genres gains watched_fraction / |genres|.
inline InterestVector interest_update(const ConceptSpace& space, const InterestVector& profile,
                                      const WatchEvent& event, double decay = 1.0) {
  detail::require(profile.size() == space.dimension(), "interest_update: profile dimension mismatch");
  detail::require(decay >= 0.0 && decay <= 1.0, "interest_update: decay outside [0, 1]");
  detail::validate_event(event);

  std::vector<Eigen::Index> axes;
  axes.reserve(event.genres.size());
  for (const auto& genre : event.genres) {
    const auto axis = space.find(genre);
    if (!axis) {
      throw ValidationError("unknown genre label '" + genre + "' in " + detail::describe(event));
    }
    if (std::find(axes.begin(), axes.end(), *axis) != axes.end()) {
      throw ValidationError("genre '" + genre + "' repeated in " + detail::describe(event));
    }
    axes.push_back(*axis);
  }

  InterestVector updated = decay * profile;
  const double share = event.watched_fraction / static_cast<double>(axes.size());
  for (auto axis : axes) updated[axis] += share;
  return updated;
}

/// Scales a profile so its largest entry is 1. Zero profiles are returned as is.
inline InterestVector normalize_peak(const InterestVector& profile) {
  const double peak = profile.size() == 0 ? 0.0 : profile.maxCoeff();
  return peak > 0.0 ? InterestVector(profile / peak) : profile;
}

struct BuildOptions {
  double decay = 1.0;
  bool normalize = false;
};

/// Builds one ProfileSeries per user from an unordered event log.
///
/// Events are folded in (timestamp, content) order, so the result does not
/// depend on the order of `events`. Snapshot k holds every event with
/// timestamp <= instants[k]. A user's series starts at the first instant
/// that follows one of their events; users without such an event are omitted.
inline SeriesMap build_series(std::span<const WatchEvent> events, const ConceptSpace& space,
                              std::span<const std::int64_t> instants, BuildOptions options = {}) {
  detail::require(!instants.empty(), "build_series: snapshot instants list is empty");
  for (std::size_t k = 1; k < instants.size(); ++k) {
    detail::require(instants[k - 1] < instants[k],
                    "build_series: snapshot instants are not strictly increasing");
  }
  detail::require(options.decay >= 0.0 && options.decay <= 1.0, "build_series: decay outside [0, 1]");

  std::map<std::string, std::vector<const WatchEvent*>> by_user;
  for (const auto& event : events) {
    detail::validate_event(event);
    by_user[event.user_id].push_back(&event);
  }

  SeriesMap result;
  for (auto& [user, log] : by_user) {
    std::sort(log.begin(), log.end(), [](const WatchEvent* a, const WatchEvent* b) {
      return std::tie(a->timestamp, a->watched_fraction, a->genres) <
             std::tie(b->timestamp, b->watched_fraction, b->genres);
    });

    ProfileSeries series;
    series.user_id = user;
    InterestVector profile = space.zero();
    std::size_t next = 0;
    bool seen_any = false;
    for (const auto instant : instants) {
      while (next < log.size() && log[next]->timestamp <= instant) {
        profile = interest_update(space, profile, *log[next], options.decay);
        seen_any = true;
        ++next;
      }
      if (!seen_any) continue;
      series.instants.push_back(instant);
      series.profiles.push_back(options.normalize ? normalize_peak(profile) : profile);
    }
    if (!series.profiles.empty()) result.emplace(user, std::move(series));
  }
  return result;
}

inline SeriesMap build_series(const std::vector<WatchEvent>& events, const ConceptSpace& space,
                              const std::vector<std::int64_t>& instants, BuildOptions options = {}) {
  return build_series(std::span<const WatchEvent>(events), space,
                      std::span<const std::int64_t>(instants), options);
}

}  // namespace kalrec
