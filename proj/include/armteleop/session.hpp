#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "armteleop/ik_solver.hpp"
#include "armteleop/mapping.hpp"
#include "armteleop/robot_sim.hpp"

namespace armteleop {

struct SessionConfig {
    double frame_rate = 35.0;      // Hz
    double overlap_epsilon = 0.01; // rad, per joint
    IkConfig ik;
    RobotLimits limits;
    KinematicChain chain = reference_chain();
    Quat rotation_offset = Quat::Identity(); // initial mapping offset

    void validate() const; // throws std::invalid_argument
};

namespace event {
struct Freeze {};
struct Unfreeze {};
struct SetScale {
    double scale = 1.0;
};
struct FlipAxis {
    MirrorAxis axis = MirrorAxis::x;
};
struct SetRotationOffset {
    Quat offset = Quat::Identity();
};
} // namespace event

using MappingEvent =
    std::variant<event::Freeze, event::Unfreeze, event::SetScale, event::FlipAxis, event::SetRotationOffset>;

std::string describe(const MappingEvent& e);

/// An event as it landed in the log: applied, or rejected with a reason.
struct EventRecord {
    MappingEvent event;
    std::optional<std::string> rejected;
};

struct FrameOutput {
    std::size_t frame_index = 0;
    double time = 0.0; // session clock, frame_index / frame_rate after the step
    JointConfig virtual_q;
    RobotState physical;
    GripperTarget target;
    bool anomaly = false;
    bool overlap = false;
    double lag_distance = 0.0; // m, between the two TCPs
    bool embodiment_active = true;
    double scale = 1.0;
    int mirror_x = 1;
    int mirror_y = 1;
};

struct LogRecord {
    HandSample hand;
    FrameOutput out;
    std::vector<EventRecord> events; // applied since the previous frame
};

using SessionLog = std::vector<LogRecord>;

/// One operator driving one robot: hand sample in, both twins out, once per
/// frame. Single-threaded; the gateway serializes access.
class Session {
public:
    explicit Session(SessionConfig cfg);

    FrameOutput tick(const HandSample& hand);

    /// Applies a mapping event against the latest hand sample and the virtual
    /// twin's TCP. Throws MappingError on an invalid transition, leaving the
    /// state unchanged. Either way the event shows up in the next record.
    void apply_event(const MappingEvent& e);

    const SessionLog& log() const { return log_; }
    const SessionConfig& config() const { return cfg_; }
    const MappingState& mapping() const { return mapping_; }
    const JointConfig& virtual_q() const { return virtual_q_; }
    const RobotSimulator& robot() const { return sim_; }
    std::size_t frames() const { return log_.size(); }

private:
    Pose virtual_tcp() const;
    HandSample current_hand() const;

    SessionConfig cfg_;
    EvolutionaryIk ik_;
    RobotSimulator sim_;
    MappingState mapping_;
    bool anchored_ = false;
    std::optional<HandSample> last_hand_;
    JointConfig virtual_q_;
    JointConfig seed_;                     // solver seed for the next frame
    std::optional<JointConfig> prev_raw_; // last reachable raw solution while tracking
    std::optional<JointCommand> last_command_;
    std::vector<EventRecord> staged_events_;
    SessionLog log_;
};

using TraceItem = std::variant<HandSample, MappingEvent>;

struct TraceEntry {
    double t = 0.0;
    TraceItem item;
};

using Trace = std::vector<TraceEntry>;

/// Feeds the trace through a fresh session: every hand sample is one frame,
/// events apply at their place in the sequence. Rejected events are logged,
/// not thrown. Throws std::invalid_argument on non-monotone timestamps.
SessionLog replay(const SessionConfig& cfg, const Trace& trace);

} // namespace armteleop
