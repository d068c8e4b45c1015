#include "cil/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "cil/error.hpp"

namespace cil {

using nlohmann::json;

void SessionSchedule::validate(bool allow_overlap) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (sessions.empty()) fail("schedule has no sessions");
  if (sessions.front().class_ids.size() < 2) fail("first session needs at least 2 classes");
  std::set<std::uint32_t> seen;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& session = sessions[s];
    const std::string where = "session " + std::to_string(s + 1);
    if (session.class_ids.empty()) fail(where + " has no classes");
    if (session.shots && *session.shots == 0) fail(where + " has zero shots");
    std::set<std::uint32_t> local;
    for (const auto id : session.class_ids) {
      if (!local.insert(id).second) fail(where + " lists class " + std::to_string(id) + " twice");
      if (!seen.insert(id).second && !allow_overlap) {
        fail(where + " repeats class " + std::to_string(id) + " from an earlier session");
      }
    }
  }
}

std::vector<std::uint32_t> SessionSchedule::all_classes() const {
  std::set<std::uint32_t> ids;
  for (const auto& s : sessions) ids.insert(s.class_ids.begin(), s.class_ids.end());
  return {ids.begin(), ids.end()};
}

SessionSchedule parse_schedule(const std::string& json_text) {
  SessionSchedule schedule;
  try {
    const json doc = json::parse(json_text);
    for (const auto& entry : doc.at("sessions")) {
      Session s;
      for (const auto& id : entry.at("classes")) {
        if (!id.is_number_unsigned() || id.get<std::uint64_t>() > std::numeric_limits<std::uint32_t>::max()) {
          throw Error(ErrorCode::InvalidConfig, "class ids must be unsigned 32-bit integers");
        }
        s.class_ids.push_back(id.get<std::uint32_t>());
      }
      if (entry.contains("shots")) {
        const auto& shots = entry.at("shots");
        if (shots.is_string()) {
          if (shots.get<std::string>() != "all") throw Error(ErrorCode::InvalidConfig, "shots must be an integer or \"all\"");
        } else {
          if (!shots.is_number_integer()) throw Error(ErrorCode::InvalidConfig, "shots must be an integer or \"all\"");
          const auto n = shots.get<std::int64_t>();
          if (n <= 0) throw Error(ErrorCode::InvalidConfig, "shots must be positive");
          s.shots = static_cast<std::uint32_t>(n);
        }
      }
      schedule.sessions.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed schedule: ") + e.what());
  }
  return schedule;
}

std::string schedule_to_json(const SessionSchedule& schedule) {
  json sessions = json::array();
  for (const auto& s : schedule.sessions) {
    json entry;
    entry["classes"] = s.class_ids;
    if (s.shots) {
      entry["shots"] = *s.shots;
    } else {
      entry["shots"] = "all";
    }
    sessions.push_back(std::move(entry));
  }
  return json{{"sessions", sessions}}.dump(2) + "\n";
}

SessionSchedule load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_schedule(buffer.str());
}

void save_schedule(const std::filesystem::path& path, const SessionSchedule& schedule) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out << schedule_to_json(schedule);
}

SessionSchedule permute_sessions(const SessionSchedule& schedule, std::span<const std::size_t> perm) {
  const std::size_t n = schedule.sessions.size();
  if (perm.size() != n) throw Error(ErrorCode::InvalidPermutation, "permutation length differs from session count");
  std::vector<bool> used(n, false);
  SessionSchedule out;
  out.sessions.reserve(n);
  for (const auto p : perm) {
    if (p >= n || used[p]) throw Error(ErrorCode::InvalidPermutation, "not a permutation of session indices");
    used[p] = true;
    out.sessions.push_back(schedule.sessions[p]);
  }
  return out;
}

SchedulePreset parse_preset(const std::string& name) {
  if (name == "high-shot" || name == "high_shot") return SchedulePreset::high_shot;
  if (name == "few-shot+" || name == "few_shot_plus" || name == "few-shot-plus") return SchedulePreset::few_shot_plus;
  if (name == "few-shot" || name == "few_shot") return SchedulePreset::few_shot;
  throw Error(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
}

SessionSchedule make_preset(SchedulePreset preset, std::uint32_t num_classes, const PresetOverrides& overrides) {
  auto fraction = [&](double f) {
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(f * num_classes)));
  };
  std::uint32_t first = 0, per_session = 0;
  std::optional<std::uint32_t> first_shots, shots;
  switch (preset) {
    case SchedulePreset::high_shot:
      first = per_session = fraction(0.1);
      break;
    case SchedulePreset::few_shot_plus:
      first = fraction(0.6);
      per_session = 5;
      shots = 5;
      break;
    case SchedulePreset::few_shot:
      first = fraction(0.2);
      per_session = fraction(0.1);
      first_shots = shots = 50;
      break;
  }
  auto as_shots = [](std::uint32_t v) { return v == 0 ? std::nullopt : std::optional<std::uint32_t>(v); };
  first = overrides.first_classes.value_or(first);
  per_session = overrides.classes_per_session.value_or(per_session);
  if (overrides.first_shots) first_shots = as_shots(*overrides.first_shots);
  if (overrides.shots) shots = as_shots(*overrides.shots);

  if (num_classes < 2) throw Error(ErrorCode::InvalidConfig, "presets need at least 2 classes");
  first = std::max<std::uint32_t>(first, 2);
  if (first > num_classes || per_session == 0) throw Error(ErrorCode::InvalidConfig, "preset session sizes do not fit");

  SessionSchedule schedule;
  std::uint32_t next = 0;
  auto take = [&](std::uint32_t n, std::optional<std::uint32_t> s) {
    Session session{{}, s};
    for (std::uint32_t i = 0; i < n && next < num_classes; ++i) session.class_ids.push_back(next++);
    schedule.sessions.push_back(std::move(session));
  };
  take(first, first_shots);
  while (next < num_classes) take(per_session, shots);
  return schedule;
}

}  // namespace cil
