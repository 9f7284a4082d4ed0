#pragma once
// Post-hoc coding of every agent-tick into exploring, exploiting or copying,
// using public information only (positions, headings, speeds).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csense/engine.hpp"

namespace csense {

struct ReplayLog;

enum class State : std::uint8_t { exploring, exploiting, copying };

std::string_view to_string(State s);
State state_from_string(std::string_view s);

struct StateLabel {
  State state = State::exploring;
  int target = -1;  // copy target, copying only

  friend bool operator==(const StateLabel&, const StateLabel&) = default;
};

struct ClassifierParams {
  std::size_t spin_window = 8;    // ticks (1 s)
  std::size_t slow_window = 24;   // ticks (3 s)
  double displacement_fraction = 2.0 / 3.0;
  std::size_t copy_window = 4;    // ticks (500 ms)
  double cone_half_angle = 60.0;  // degrees
  double straight_tolerance = 5.0;  // total heading change allowed while copying
  double fast_speed = kFastSpeed;
  double slow_speed = kSlowSpeed;
  double turn_quantum = 5.0;      // degrees per tick while an arrow is held

  void validate() const;
};

/// Spinning: slow speed throughout and a monotone one-quantum heading change
/// every tick. `window` holds spin_window + 1 poses (the pose before the
/// window supplies the first heading change), oldest first.
bool detect_spinning(std::span<const PublicPose> window, const ClassifierParams& params = {});

/// Label for the last entry of `history` (one agent's poses, oldest first,
/// one per tick, ending at the tick being labelled). `others_recent` holds
/// the other agents' poses for the last copy_window ticks, oldest first,
/// aligned with the tail of `history`.
StateLabel classify_tick(std::span<const PublicPose> history,
                         std::span<const std::vector<PublicPose>> others_recent,
                         const ClassifierParams& params = {});

struct LabelRecord {
  std::size_t t = 0;
  int agent = 0;
  StateLabel label{};

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Labels every agent at every tick of a log.
std::vector<LabelRecord> classify_log(const ReplayLog& log, const ClassifierParams& params = {});

/// Line-delimited label file: {"t":..,"id":..,"state":"..","target":..}.
std::string labels_to_jsonl(std::span<const LabelRecord> labels);
std::vector<LabelRecord> labels_from_jsonl(const std::string& text);

}  // namespace csense
