#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cil {

struct Session {
  std::vector<std::uint32_t> class_ids;
  std::optional<std::uint32_t> shots;  // nullopt: every available example

  friend bool operator==(const Session&, const Session&) = default;
};

/// Ordered sessions; session i (0-based) is reported as session i + 1.
struct SessionSchedule {
  std::vector<Session> sessions;

  // Throws InvalidConfig. Overlapping class sets are rejected unless allowed.
  void validate(bool allow_overlap = false) const;
  std::vector<std::uint32_t> all_classes() const;
  std::size_t size() const { return sessions.size(); }

  friend bool operator==(const SessionSchedule&, const SessionSchedule&) = default;
};

// JSON form: {"sessions": [{"classes": [ids], "shots": int | "all"}]}
SessionSchedule parse_schedule(const std::string& json_text);
std::string schedule_to_json(const SessionSchedule& schedule);
SessionSchedule load_schedule(const std::filesystem::path& path);
void save_schedule(const std::filesystem::path& path, const SessionSchedule& schedule);

/// Position i of the result holds session perm[i] of the input.
SessionSchedule permute_sessions(const SessionSchedule& schedule, std::span<const std::size_t> perm);

enum class SchedulePreset { high_shot, few_shot_plus, few_shot };

SchedulePreset parse_preset(const std::string& name);

struct PresetOverrides {
  std::optional<std::uint32_t> first_classes;
  std::optional<std::uint32_t> classes_per_session;
  std::optional<std::uint32_t> first_shots;  // 0 means "all"
  std::optional<std::uint32_t> shots;        // 0 means "all"
};

/// Session shapes for classes 0..num_classes-1:
///   high_shot:     10% of classes per session including the first, all examples
///   few_shot_plus: 60% of classes with all examples first, then 5 classes x 5 shots
///   few_shot:      20% of classes first, then 10% per session, 50 shots everywhere
/// A trailing session may be smaller when the classes do not divide evenly.
SessionSchedule make_preset(SchedulePreset preset, std::uint32_t num_classes, const PresetOverrides& overrides = {});

}  // namespace cil
