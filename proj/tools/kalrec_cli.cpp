// kalrec: simulate -> build-profiles -> track -> recommend -> evaluate.
//
// Every subcommand reads its inputs and computes all outputs in memory before
// the output directory is touched, so a failing run leaves no partial files.
// Exit codes: 0 success, 2 usage or input error, 1 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#if __has_include("CLI11.hpp")
#include "CLI11.hpp"
#else
#include <CLI/CLI.hpp>
#endif
#include "kalrec/io.hpp"
#include "kalrec/kalrec.hpp"

namespace fs = std::filesystem;
using namespace kalrec;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 1;

/// Reads plain `key=value` files and applies the keys to whichever
/// subcommand was selected, so scenario files need no section headers.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto selected = app_->get_subcommands();
    if (!selected.empty()) {
      for (auto& item : items) {
        if (item.parents.empty()) item.parents.push_back(selected.front()->get_name());
      }
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

/// Files produced by a command, written only once everything succeeded.
class OutputSet {
 public:
  void add(std::string relative, std::string contents) { files_[std::move(relative)] = std::move(contents); }

  void commit(const fs::path& dir) const {
    for (const auto& [relative, contents] : files_) {
      const fs::path path = dir / relative;
      fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << contents;
      if (!out) throw std::runtime_error("cannot write " + path.string());
    }
  }

 private:
  std::map<std::string, std::string> files_;
};

template <typename Fn>
auto with_file(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return fn(in);
}

std::string manifest(const CLI::App& command) {
  return "command=" + command.get_name() + "\n" + command.config_to_str(true, false);
}

struct ModelOptions {
  double interval = 1.0;
  double alpha = 1.0;
  double q = 1e-3;
  double r = 1e-2;
  double p0 = 10.0;
  std::string noise = "white_acceleration";

  void attach(CLI::App& cmd) {
    cmd.add_option("--T", interval, "Inter-sample interval")->capture_default_str();
    cmd.add_option("--alpha", alpha, "Transition diagonal")->capture_default_str();
    cmd.add_option("--q", q, "Process-noise scale")->capture_default_str();
    cmd.add_option("--r", r, "Measurement-noise variance")->capture_default_str();
    cmd.add_option("--p0", p0, "Initial covariance scale")->capture_default_str();
    cmd.add_option("--noise", noise, "Process-noise block")
        ->check(CLI::IsMember({"white_acceleration", "identity"}))
        ->capture_default_str();
  }

  TrackingModel build(Eigen::Index d) const {
    return build_model(d, interval, alpha, q, r,
                       noise == "identity" ? ProcessNoise::Identity : ProcessNoise::WhiteAcceleration);
  }
};

struct Common {
  std::string out;
  std::uint64_t seed = 7;

  void attach(CLI::App& cmd) {
    cmd.add_option("--out", out, "Output directory (created if absent)")->required();
    cmd.add_option("--seed", seed, "Random seed")->capture_default_str();
  }
};

// simulate -----------------------------------------------------------------

struct SimulateCmd {
  Common common;
  long long d = 44;
  long long k = 35;
  long long users = 50;
  std::string regime = "smooth_drift";
  double q_true = 1e-3;
  double r_true = 1e-2;
  double interval = 1.0;
  double alpha = 1.0;
  long long programs_per_day = 10;
  std::string start = "2008-09-01";
  long long spacing = kSecondsPerDay;

  void attach(CLI::App& cmd) {
    common.attach(cmd);
    cmd.add_option("--d", d, "Number of genres")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--k", k, "Snapshot instants per user")->check(CLI::Range(2LL, 1000000LL))->capture_default_str();
    cmd.add_option("--users", users, "Number of users")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--regime", regime, "smooth_drift | regime_change | bursty")
        ->check(CLI::IsMember({"smooth_drift", "regime_change", "bursty"}))
        ->capture_default_str();
    cmd.add_option("--q-true", q_true, "Generative process-noise scale")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd.add_option("--r-true", r_true, "Generative observation-noise variance")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd.add_option("--T", interval, "Inter-sample interval")->capture_default_str();
    cmd.add_option("--alpha", alpha, "Transition diagonal")->capture_default_str();
    cmd.add_option("--programs-per-day", programs_per_day, "Event resolution per instant")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--start", start, "First snapshot instant (epoch seconds or ISO-8601)")->capture_default_str();
    cmd.add_option("--spacing", spacing, "Seconds between snapshot instants")->check(CLI::PositiveNumber)->capture_default_str();
  }

  OutputSet run(const CLI::App& cmd) const {
    ScenarioConfig config;
    config.d = static_cast<Eigen::Index>(d);
    config.steps = static_cast<std::size_t>(k);
    config.n_users = static_cast<std::size_t>(users);
    config.q_true = q_true;
    config.r_true = r_true;
    config.regime = parse_regime(regime);
    config.seed = common.seed;
    config.interval = interval;
    config.alpha = alpha;
    const auto t0 = io::parse_timestamp(start);
    if (!t0) throw ValidationError("invalid --start '" + start + "'");
    config.start_time = *t0;
    config.instant_spacing = spacing;
    config.validate();

    std::vector<std::string> labels;
    for (long long i = 0; i < d; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "genre_%02lld", i + 1);
      labels.emplace_back(buf);
    }
    const ConceptSpace space(labels);
    const auto trajectories = generate_trajectories(config);
    const auto events = generate_events(trajectories, space, static_cast<std::size_t>(programs_per_day),
                                        detail::mix_seed(common.seed, 0xe7e47ULL));

    OutputSet out;
    std::ostringstream vocab, instants, traj, ev;
    io::write_vocabulary(vocab, space);
    io::write_instants(instants, config.instants());
    io::write_profiles(traj, space, trajectories);
    io::write_events(ev, events);
    out.add("vocabulary.txt", vocab.str());
    out.add("instants.txt", instants.str());
    out.add("trajectories.csv", traj.str());
    out.add("events.csv", ev.str());
    out.add("manifest.txt", manifest(cmd));
    return out;
  }
};

// build-profiles -----------------------------------------------------------

struct BuildProfilesCmd {
  Common common;
  std::string vocab;
  std::string events;
  std::string instants;
  double decay = 1.0;
  bool normalize = false;

  void attach(CLI::App& cmd) {
    common.attach(cmd);
    cmd.add_option("--vocab", vocab, "Genre vocabulary file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--events", events, "Watch-event CSV")->required()->check(CLI::ExistingFile);
    cmd.add_option("--instants", instants, "Snapshot instants, one per line")->required()->check(CLI::ExistingFile);
    cmd.add_option("--decay", decay, "Per-event decay in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd.add_flag("--normalize", normalize, "Scale each profile so its peak is 1");
  }

  OutputSet run(const CLI::App& cmd) const {
    const auto space = with_file(vocab, [&](std::istream& in) { return io::read_vocabulary(in, vocab); });
    const auto log = with_file(events, [&](std::istream& in) { return io::read_events(in, events); });
    const auto times = with_file(instants, [&](std::istream& in) { return io::read_instants(in, instants); });
    const auto series = build_series(log, space, times, BuildOptions{decay, normalize});

    OutputSet out;
    std::ostringstream profiles;
    io::write_profiles(profiles, space, series);
    out.add("profiles.csv", profiles.str());
    out.add("manifest.txt", manifest(cmd));
    return out;
  }
};

// track --------------------------------------------------------------------

struct TrackCmd {
  Common common;
  ModelOptions model;
  std::string vocab;
  std::string profiles;
  bool decoupled = false;

  void attach(CLI::App& cmd) {
    common.attach(cmd);
    model.attach(cmd);
    cmd.add_option("--vocab", vocab, "Genre vocabulary file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--profiles", profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
    cmd.add_flag("--decoupled", decoupled, "Run one 3-state filter per genre instead of the dense filter");
  }

  OutputSet run(const CLI::App& cmd) const {
    const auto space = with_file(vocab, [&](std::istream& in) { return io::read_vocabulary(in, vocab); });
    const auto series = with_file(profiles, [&](std::istream& in) { return io::read_profiles(in, space, profiles); });
    if (series.empty()) throw ValidationError(profiles + ": no profiles to track");
    const auto tracking = model.build(space.dimension());

    OutputSet out;
    std::size_t tracked = 0;
    for (const auto& [user, s] : series) {
      if (s.size() < 2) continue;
      const auto record = decoupled ? track_series_decoupled(tracking, s, model.p0)
                                    : track_series(tracking, s, model.p0);
      std::ostringstream csv;
      io::write_track_record(csv, space, record);
      out.add("tracks/track_" + io::escape_filename(user) + ".csv", csv.str());
      ++tracked;
    }
    if (tracked == 0) throw ValidationError(profiles + ": no user has the two profiles needed for tracking");
    out.add("manifest.txt", manifest(cmd));
    return out;
  }
};

// recommend ----------------------------------------------------------------

struct RecommendCmd {
  Common common;
  ModelOptions model;
  std::string vocab;
  std::string profiles;
  std::string events;
  std::string catalog;
  std::string date;
  double theta = 0.05;

  void attach(CLI::App& cmd) {
    common.attach(cmd);
    model.attach(cmd);
    cmd.add_option("--vocab", vocab, "Genre vocabulary file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--profiles", profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
    cmd.add_option("--events", events, "Watch-event CSV used for same-day refinement")->check(CLI::ExistingFile);
    cmd.add_option("--catalog", catalog, "Program catalog CSV (program_id,genres)")->check(CLI::ExistingFile);
    cmd.add_option("--date", date, "Day to recommend for, YYYY-MM-DD")->required();
    cmd.add_option("--theta", theta, "Delta threshold")->check(CLI::PositiveNumber)->capture_default_str();
  }

  OutputSet run(const CLI::App& cmd) const {
    const auto day = io::parse_timestamp(date);
    if (!day || date.size() != 10) throw ValidationError("invalid --date '" + date + "' (expected YYYY-MM-DD)");
    const std::int64_t day_start = *day;
    const std::int64_t day_end = day_start + kSecondsPerDay;

    const auto space = with_file(vocab, [&](std::istream& in) { return io::read_vocabulary(in, vocab); });
    const auto series = with_file(profiles, [&](std::istream& in) { return io::read_profiles(in, space, profiles); });
    std::vector<WatchEvent> log;
    if (!events.empty()) log = with_file(events, [&](std::istream& in) { return io::read_events(in, events); });
    std::vector<Program> programs;
    if (!catalog.empty()) {
      programs = with_file(catalog, [&](std::istream& in) { return io::read_catalog(in, space, catalog); });
    }
    const auto tracking = model.build(space.dimension());

    std::map<std::string, std::set<std::string>> watched;
    for (const auto& e : log) {
      if (e.timestamp < day_start || e.timestamp >= day_end) continue;
      for (const auto& g : e.genres) watched[e.user_id].insert(g);
    }

    std::ostringstream jsonl;
    for (const auto& [user, s] : series) {
      // History strictly before the day being recommended.
      ProfileSeries history;
      history.user_id = user;
      for (std::size_t k = 0; k < s.size() && s.instants[k] <= day_start; ++k) {
        history.instants.push_back(s.instants[k]);
        history.profiles.push_back(s.profiles[k]);
      }
      if (history.profiles.empty()) continue;
      const InterestVector& calculated = history.profiles.back();
      const InterestVector estimated =
          history.size() >= 2 ? track_series(tracking, history, model.p0).next_prediction : calculated;
      auto rec = recommend(concept_deltas(estimated, calculated, theta), watched[user], space);
      rec.user_id = user;
      if (catalog.empty()) {
        jsonl << io::recommendation_json(rec, date) << '\n';
      } else {
        const auto picks = filter_catalog(programs, rec);
        jsonl << io::recommendation_json(rec, date, &picks) << '\n';
      }
    }

    OutputSet out;
    out.add("recommendations.jsonl", jsonl.str());
    out.add("manifest.txt", manifest(cmd));
    return out;
  }
};

// evaluate -----------------------------------------------------------------

struct EvaluateCmd {
  Common common;
  std::string vocab;
  std::string profiles;
  std::string tracks;
  double tau = kDefaultCosineThreshold;

  void attach(CLI::App& cmd) {
    common.attach(cmd);
    cmd.add_option("--vocab", vocab, "Genre vocabulary file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--profiles", profiles, "Profile CSV (the observed truth)")->required()->check(CLI::ExistingFile);
    cmd.add_option("--tracks", tracks, "Directory of track_<user>.csv files")->required()->check(CLI::ExistingDirectory);
    cmd.add_option("--tau", tau, "Cosine-distance threshold")->check(CLI::NonNegativeNumber)->capture_default_str();
  }

  OutputSet run(const CLI::App& cmd) const {
    const auto space = with_file(vocab, [&](std::istream& in) { return io::read_vocabulary(in, vocab); });
    const auto series = with_file(profiles, [&](std::istream& in) { return io::read_profiles(in, space, profiles); });

    std::vector<EvalReport> reports;
    std::ostringstream steps, users;
    io::write_eval_steps_header(steps);
    users << "user_id,evaluated_steps,skipped_steps,fraction_below_threshold,smoothness_ratio,mean_axis_rmse\n";
    for (const auto& [user, s] : series) {
      if (s.size() < 2) continue;
      const auto path = (fs::path(tracks) / ("track_" + io::escape_filename(user) + ".csv")).string();
      if (!fs::exists(path)) throw ValidationError("missing track file " + path + " for user '" + user + "'");
      const auto record = with_file(path, [&](std::istream& in) { return io::read_track_record(in, space, path); });
      for (std::size_t j = 0; j < record.steps.size(); ++j) {
        if (record.steps[j].step != j + 1) throw ValidationError(path + ": steps must run 1..K-1 in order");
      }
      const auto report = evaluate(s, record.predictions(), tau);
      io::write_eval_steps(steps, user, report);
      users << user << ',' << report.evaluated_steps() << ',' << report.skipped_steps << ','
            << io::format_double(report.fraction_below_threshold) << ',' << io::format_double(report.smoothness_ratio)
            << ',' << io::format_double(report.per_axis_rmse.mean()) << '\n';
      reports.push_back(report);
    }
    if (reports.empty()) throw ValidationError(profiles + ": no user has a trackable series");

    std::ostringstream summary;
    io::write_eval_summary(summary, pool(reports));
    OutputSet out;
    out.add("eval_steps.csv", steps.str());
    out.add("eval_users.csv", users.str());
    out.add("eval_summary.txt", summary.str());
    out.add("manifest.txt", manifest(cmd));
    return out;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman-filter interest tracking and genre recommendation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));

  SimulateCmd simulate;
  BuildProfilesCmd build_profiles;
  TrackCmd track;
  RecommendCmd recommend_cmd;
  EvaluateCmd evaluate_cmd;

  auto* sim = app.add_subcommand("simulate", "Generate synthetic trajectories and watch events");
  auto* bld = app.add_subcommand("build-profiles", "Fold watch events into per-user interest profiles");
  auto* trk = app.add_subcommand("track", "Run the Kalman predictor over each user's profiles");
  auto* rec = app.add_subcommand("recommend", "Emit per-user genre recommendations for one day");
  auto* evl = app.add_subcommand("evaluate", "Score predictions against observed profiles");
  for (auto* cmd : {sim, bld, trk, rec, evl}) cmd->fallthrough();
  simulate.attach(*sim);
  build_profiles.attach(*bld);
  track.attach(*trk);
  recommend_cmd.attach(*rec);
  evaluate_cmd.attach(*evl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    OutputSet out;
    std::string dir;
    if (sim->parsed()) {
      out = simulate.run(*sim);
      dir = simulate.common.out;
    } else if (bld->parsed()) {
      out = build_profiles.run(*bld);
      dir = build_profiles.common.out;
    } else if (trk->parsed()) {
      out = track.run(*trk);
      dir = track.common.out;
    } else if (rec->parsed()) {
      out = recommend_cmd.run(*rec);
      dir = recommend_cmd.common.out;
    } else {
      out = evaluate_cmd.run(*evl);
      dir = evaluate_cmd.common.out;
    }
    out.commit(dir);
  } catch (const NumericalError& e) {
    std::cerr << "kalrec: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "kalrec: error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "kalrec: error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
