#pragma once

// On-disk formats shared by the command-line tool:
//   vocabulary   one genre label per line; line order is axis order
//   events       CSV: user_id,timestamp,genres,watched_fraction
//                (timestamp as epoch seconds or ISO-8601, genres separated by ';')
//   profiles     CSV: user_id,instant,<one column per genre>
//   track        CSV: step,pred_<genre>...,innov_<genre>...,gain_norm,P_trace
//   instants     one timestamp per line
//   catalog      CSV: program_id,genres
// Reals are written with 17 significant digits so they round-trip exactly.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"
#include "kalrec/evaluation.hpp"
#include "kalrec/kalman_tracker.hpp"
#include "kalrec/profile_builder.hpp"
#include "kalrec/recommender.hpp"

namespace kalrec::io {

inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

/// Reader over a line-oriented stream that tags errors with a source location.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ValidationError(source_ + ":" + std::to_string(line_no_) + ": " + message);
  }

  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

inline double parse_double(std::string_view text, const LineReader& reader) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(value)) {
    reader.fail("invalid number '" + std::string(text) + "'");
  }
  return value;
}

/// Epoch seconds, or ISO-8601 `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` with an
/// optional trailing `Z` (UTC).
inline std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  if (s.find('-', 1) == std::string::npos) {
    char* end = nullptr;
    const long long value = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return static_cast<std::int64_t>(value);
  }
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%n", &y, &mo, &d, &consumed) != 3) return std::nullopt;
  std::string_view rest(s.c_str() + consumed);
  if (!rest.empty()) {
    if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
    const std::string time(rest.substr(1));
    int used = 0;
    if (std::sscanf(time.c_str(), "%u:%u:%u%n", &h, &mi, &sec, &used) != 3) return std::nullopt;
    const std::string_view zone = std::string_view(time).substr(static_cast<std::size_t>(used));
    if (!zone.empty() && zone != "Z") return std::nullopt;
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

/// `YYYY-MM-DD` of an epoch timestamp (UTC).
inline std::string format_date(std::int64_t timestamp) {
  const auto days = std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{timestamp}});
  const std::chrono::year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

namespace detail {

inline void check_identifier(const std::string& id, const char* what) {
  kalrec::detail::require(!id.empty(), std::string("empty ") + what);
  for (unsigned char c : id) {
    kalrec::detail::require(c != ',' && c != '"' && c >= 0x20 && c != 0x7f,
                            std::string(what) + " '" + id + "' contains a reserved character");
  }
}

inline void expect_header(LineReader& reader, const std::vector<std::string>& expected) {
  std::string line;
  if (!reader.next(line)) reader.fail("missing header line");
  const auto columns = split(line, ',');
  if (columns != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    reader.fail("unexpected header; expected '" + want + "'");
  }
}

}  // namespace detail

// vocabulary ---------------------------------------------------------------

inline ConceptSpace read_vocabulary(std::istream& in, const std::string& source = "vocabulary") {
  LineReader reader(in, source);
  std::vector<std::string> labels;
  std::string line;
  while (reader.next(line)) labels.push_back(line);
  while (!labels.empty() && trim(labels.back()).empty()) labels.pop_back();
  return ConceptSpace(std::move(labels));
}

inline void write_vocabulary(std::ostream& out, const ConceptSpace& space) {
  for (const auto& label : space.labels()) out << label << '\n';
}

// events -------------------------------------------------------------------

inline std::vector<WatchEvent> read_events(std::istream& in, const std::string& source = "events") {
  LineReader reader(in, source);
  detail::expect_header(reader, {"user_id", "timestamp", "genres", "watched_fraction"});
  std::vector<WatchEvent> events;
  std::string line;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) reader.fail("expected 4 fields, got " + std::to_string(fields.size()));
    WatchEvent ev;
    ev.user_id = trim(fields[0]);
    if (ev.user_id.empty()) reader.fail("empty user_id");
    const auto ts = parse_timestamp(fields[1]);
    if (!ts) reader.fail("invalid timestamp '" + fields[1] + "'");
    ev.timestamp = *ts;
    for (const auto& g : split(fields[2], ';')) {
      auto label = trim(g);
      if (label.empty()) reader.fail("empty genre label");
      ev.genres.push_back(std::move(label));
    }
    ev.watched_fraction = parse_double(fields[3], reader);
    if (ev.watched_fraction < 0.0 || ev.watched_fraction > 1.0) reader.fail("watched_fraction outside [0, 1]");
    events.push_back(std::move(ev));
  }
  return events;
}

inline void write_events(std::ostream& out, const std::vector<WatchEvent>& events) {
  out << "user_id,timestamp,genres,watched_fraction\n";
  for (const auto& ev : events) {
    detail::check_identifier(ev.user_id, "user id");
    out << ev.user_id << ',' << ev.timestamp << ',';
    for (std::size_t i = 0; i < ev.genres.size(); ++i) out << (i ? ";" : "") << ev.genres[i];
    out << ',' << format_double(ev.watched_fraction) << '\n';
  }
}

// instants -----------------------------------------------------------------

inline std::vector<std::int64_t> read_instants(std::istream& in, const std::string& source = "instants") {
  LineReader reader(in, source);
  std::vector<std::int64_t> out;
  std::string line;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto ts = parse_timestamp(line);
    if (!ts) reader.fail("invalid timestamp '" + line + "'");
    out.push_back(*ts);
  }
  return out;
}

inline void write_instants(std::ostream& out, const std::vector<std::int64_t>& instants) {
  for (auto t : instants) out << t << '\n';
}

// profiles -----------------------------------------------------------------

inline void write_profiles(std::ostream& out, const ConceptSpace& space, const SeriesMap& series) {
  out << "user_id,instant";
  for (const auto& label : space.labels()) out << ',' << label;
  out << '\n';
  for (const auto& [user, s] : series) {
    detail::check_identifier(user, "user id");
    s.validate(space.dimension());
    for (std::size_t k = 0; k < s.size(); ++k) {
      out << user << ',' << s.instants[k];
      for (Eigen::Index i = 0; i < space.dimension(); ++i) out << ',' << format_double(s.profiles[k][i]);
      out << '\n';
    }
  }
}

/// Rows of one user must be contiguous and in increasing instant order.
inline SeriesMap read_profiles(std::istream& in, const ConceptSpace& space, const std::string& source = "profiles") {
  LineReader reader(in, source);
  std::vector<std::string> header{"user_id", "instant"};
  header.insert(header.end(), space.labels().begin(), space.labels().end());
  detail::expect_header(reader, header);

  SeriesMap out;
  std::string current;
  std::string line;
  const auto d = static_cast<std::size_t>(space.dimension());
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != d + 2) {
      reader.fail("expected " + std::to_string(d + 2) + " fields, got " + std::to_string(fields.size()));
    }
    const std::string user = trim(fields[0]);
    if (user.empty()) reader.fail("empty user_id");
    const auto instant = parse_timestamp(fields[1]);
    if (!instant) reader.fail("invalid instant '" + fields[1] + "'");
    if (user != current && out.count(user)) reader.fail("rows of user '" + user + "' are not contiguous");
    current = user;
    auto& s = out[user];
    s.user_id = user;
    if (!s.instants.empty() && s.instants.back() >= *instant) {
      reader.fail("instants of user '" + user + "' are not strictly increasing");
    }
    InterestVector p(space.dimension());
    for (std::size_t i = 0; i < d; ++i) p[static_cast<Eigen::Index>(i)] = parse_double(fields[i + 2], reader);
    s.instants.push_back(*instant);
    s.profiles.push_back(std::move(p));
  }
  return out;
}

// track records ------------------------------------------------------------

inline std::vector<std::string> track_header(const ConceptSpace& space) {
  std::vector<std::string> h{"step"};
  for (const auto& label : space.labels()) h.push_back("pred_" + label);
  for (const auto& label : space.labels()) h.push_back("innov_" + label);
  h.emplace_back("gain_norm");
  h.emplace_back("P_trace");
  return h;
}

inline void write_track_record(std::ostream& out, const ConceptSpace& space, const TrackRecord& record) {
  const auto header = track_header(space);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& s : record.steps) {
    out << s.step;
    for (Eigen::Index i = 0; i < space.dimension(); ++i) out << ',' << format_double(s.predicted[i]);
    for (Eigen::Index i = 0; i < space.dimension(); ++i) out << ',' << format_double(s.innovation[i]);
    out << ',' << format_double(s.gain_norm) << ',' << format_double(s.covariance_trace) << '\n';
  }
}

inline TrackRecord read_track_record(std::istream& in, const ConceptSpace& space, const std::string& source = "track") {
  LineReader reader(in, source);
  detail::expect_header(reader, track_header(space));
  const auto d = static_cast<std::size_t>(space.dimension());
  TrackRecord record;
  std::string line;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2 * d + 3) reader.fail("expected " + std::to_string(2 * d + 3) + " fields");
    TrackStep s;
    char* end = nullptr;
    s.step = std::strtoull(fields[0].c_str(), &end, 10);
    if (fields[0].empty() || *end != '\0') reader.fail("invalid step '" + fields[0] + "'");
    s.predicted.resize(space.dimension());
    s.innovation.resize(space.dimension());
    for (std::size_t i = 0; i < d; ++i) {
      s.predicted[static_cast<Eigen::Index>(i)] = parse_double(fields[1 + i], reader);
      s.innovation[static_cast<Eigen::Index>(i)] = parse_double(fields[1 + d + i], reader);
    }
    s.gain_norm = parse_double(fields[1 + 2 * d], reader);
    s.covariance_trace = parse_double(fields[2 + 2 * d], reader);
    record.steps.push_back(std::move(s));
  }
  return record;
}

/// Percent-escapes everything outside [A-Za-z0-9._-] so any user id maps to
/// a distinct, portable file name.
inline std::string escape_filename(std::string_view id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  if (out == "." || out == "..") out = "%2E" + out.substr(1);
  return out;
}

// catalog ------------------------------------------------------------------

inline std::vector<Program> read_catalog(std::istream& in, const ConceptSpace& space, const std::string& source = "catalog") {
  LineReader reader(in, source);
  detail::expect_header(reader, {"program_id", "genres"});
  std::vector<Program> out;
  std::string line;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) reader.fail("expected 2 fields");
    Program p;
    p.id = trim(fields[0]);
    if (p.id.empty()) reader.fail("empty program_id");
    for (const auto& g : split(fields[1], ';')) {
      auto label = trim(g);
      if (!space.find(label)) reader.fail("unknown genre label '" + label + "'");
      p.genres.push_back(std::move(label));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// recommendations ----------------------------------------------------------

inline std::string recommendation_json(const Recommendation& rec, const std::string& date,
                                       const std::vector<Program>* programs = nullptr) {
  nlohmann::ordered_json j;
  j["user_id"] = rec.user_id;
  j["date"] = date;
  j["promoted"] = rec.promoted;
  j["demoted"] = rec.demoted;
  j["excluded_watched"] = rec.excluded_watched;
  if (programs) {
    auto ids = nlohmann::json::array();
    for (const auto& p : *programs) ids.push_back(p.id);
    j["programs"] = ids;
  }
  return j.dump();
}

// evaluation ---------------------------------------------------------------

inline void write_eval_steps_header(std::ostream& out) { out << "user_id,step,cosine_distance,skipped\n"; }

/// Steps are numbered like the track records: prediction j scores observation j + 1.
inline void write_eval_steps(std::ostream& out, const std::string& user, const EvalReport& report) {
  for (std::size_t j = 0; j < report.per_step_cosine.size(); ++j) {
    const auto& c = report.per_step_cosine[j];
    out << user << ',' << j + 1 << ',' << (c ? format_double(*c) : std::string("")) << ',' << (c ? 0 : 1) << '\n';
  }
}

inline void write_eval_summary(std::ostream& out, const PooledSummary& s) {
  out << "users=" << s.users << '\n'
      << "threshold=" << format_double(s.threshold) << '\n'
      << "evaluated_steps=" << s.evaluated_steps << '\n'
      << "skipped_steps=" << s.skipped_steps << '\n'
      << "below_threshold=" << s.below_threshold << '\n'
      << "fraction_below_threshold=" << format_double(s.fraction_below_threshold) << '\n'
      << "mean_cosine_distance=" << format_double(s.mean_cosine) << '\n'
      << "max_cosine_distance=" << format_double(s.max_cosine) << '\n'
      << "mean_smoothness_ratio=" << format_double(s.mean_smoothness_ratio) << '\n'
      << "fraction_users_smoothing=" << format_double(s.fraction_smoothing) << '\n';
  for (std::size_t b = 0; b <= PooledSummary::kBins; ++b) {
    char key[48];
    if (b < PooledSummary::kBins) {
      std::snprintf(key, sizeof key, "histogram[%.2f,%.2f)", 0.05 * static_cast<double>(b),
                    0.05 * static_cast<double>(b + 1));
    } else {
      std::snprintf(key, sizeof key, "histogram[1.00,inf)");
    }
    out << key << '=' << s.histogram[b] << '\n';
  }
}

}  // namespace kalrec::io
