#pragma once
// Wire protocol: one JSON object per websocket text frame, no newlines.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "csense/engine.hpp"

namespace csense::server {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Client -> server -----------------------------------------------------------

struct JoinFrame {
  std::string name;
};

struct InputFrame {
  std::size_t t = 0;  // client's view of the tick; informational only
  Input input{};
};

struct VisibilityFrame {
  bool hidden = false;
};

struct PongFrame {
  std::uint64_t nonce = 0;
};

using ClientFrame = std::variant<JoinFrame, InputFrame, VisibilityFrame, PongFrame>;

/// Throws ProtocolError on malformed frames or unknown types.
ClientFrame parse_client_frame(std::string_view text);
std::string serialize(const ClientFrame& f);

// Server -> client -----------------------------------------------------------

enum class ScoreDisplay { points, percentage };

struct SelfView {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double r = 0.0;
  bool halo = false;
  bool wall = false;
  std::string score_display;
};

struct OtherView {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct StateView {
  std::size_t t = 0;
  SelfView self;
  std::vector<OtherView> others;
  std::optional<std::vector<Point>> field;  // practice rounds with a visible field
};

std::string waiting_frame(std::size_t present, std::size_t target, std::int64_t elapsed_ms);
std::string phase_frame(std::string_view phase, const nlohmann::json& config_public);
std::string state_frame(const StateView& s);
std::string ping_frame(std::uint64_t nonce);
std::string removed_frame(std::string_view reason);
std::string end_frame(double total_score);

/// Display string for the own score: accumulated points, or the current
/// reward as a percentage.
std::string format_score(ScoreDisplay mode, double score, double r);

// Privacy ---------------------------------------------------------------------

struct PrivacyViolation {
  std::size_t frame = 0;  // index into the scanned sequence
  std::string path;       // JSON pointer of the offending member
  std::string detail;
};

/// Schema-level scan of frames sent to one client: every frame must match
/// its type's schema, and reward, halo and score members may appear only
/// in the recipient's own block.
std::vector<PrivacyViolation> privacy_scan(const std::vector<std::string>& frames);

}  // namespace csense::server
