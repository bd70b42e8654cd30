#pragma once

#include <deque>
#include <optional>
#include <stdexcept>

#include "armteleop/kinematics.hpp"

namespace armteleop {

class CommandRejected : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RobotLimits {
    double max_line_velocity = 2.0;     // m/s
    double max_line_acceleration = 0.2; // m/s^2
    double gripper_speed = 100.0;       // mm/s
    double command_latency = 0.15;      // s
    double max_angular_velocity = 1.0;     // rad/s, tool orientation
    double max_angular_acceleration = 1.0; // rad/s^2

    void validate() const;
};

struct RobotState {
    JointConfig q;
    JointConfig joint_velocities;
    double gripper_openness = 0.0; // mm
    Pose tcp_pose;
    double time = 0.0;
};

struct JointCommand {
    JointConfig q;
    double openness_mm = 0.0;
};

/// Kinematic stand-in for the physical arm. Commands become visible
/// `command_latency` seconds after they are enqueued; the newest released
/// command wins. A reference tool pose moves toward the commanded one in
/// short sub-steps, along a straight line at bounded speed and acceleration
/// (and likewise for orientation), and the joints follow it through a
/// position-first inverse solve. Once the reference arrives the joints snap
/// onto the commanded configuration if they are on the same branch.
/// When the joints cannot follow (joint limits, singular poses) the
/// reference brakes to rest and the arm finishes in joint space, with joint
/// speed and acceleration small enough that the tool caps hold anywhere in
/// the workspace.
class RobotSimulator {
public:
    RobotSimulator(KinematicChain chain, RobotLimits limits);
    RobotSimulator(KinematicChain chain, RobotLimits limits, JointConfig home);

    /// Throws CommandRejected if cmd is outside the joint limits or malformed.
    void enqueue_command(const JointCommand& cmd, double now);

    /// Advances by dt in (0, 0.1] seconds.
    RobotState step(double dt);

    RobotState sample() const { return state_; }

    const KinematicChain& chain() const { return chain_; }
    const RobotLimits& limits() const { return limits_; }
    bool moving() const;
    std::size_t queued() const { return queue_.size(); }

    /// Sub-steps where the joints could not follow the reference, so far.
    std::size_t tracking_misses() const { return misses_; }

    /// Longest internal sub-step, s.
    static constexpr double kMaxSubstep = 1.0 / 140.0;

private:
    struct Queued {
        double release = 0.0;
        JointCommand cmd;
    };

    // Where the tool is meant to be. `w` is in the tool frame.
    struct Reference {
        Vec3 p = Vec3::Zero();
        Vec3 v = Vec3::Zero();
        Quat r = Quat::Identity();
        Vec3 w = Vec3::Zero();
    };

    enum class Mode { line, brake, joint };

    void release_due(double t);
    void advance(double h);
    void joint_step(double h, double span);
    // Moves the reference one sub-step and the joints after it. False if
    // the joints could not follow; `next` then holds the best attempt.
    bool line_step(double h, double span, JointConfig& next);
    bool at_goal() const;
    // Joint angles putting the tool at (p, r), starting from guess q.
    // Returns false if the position could not be matched.
    bool follow(JointConfig& q, const Vec3& p, const Quat& r) const;
    // Whether the joints, now at q, could follow the reference if it
    // started braking a little later than now.
    bool can_stop(const JointConfig& q) const;

    KinematicChain chain_;
    RobotLimits limits_;
    RobotState state_;
    std::deque<Queued> queue_;
    std::optional<JointConfig> goal_;
    Pose goal_pose_;
    double gripper_goal_ = 0.0;
    Reference ref_;
    Mode mode_ = Mode::line;
    double joint_speed_ = 0.0; // rad/s, norm over all joints, joint mode
    double joint_accel_ = 0.0; // rad/s^2
    double last_h_ = 0.0;
    std::size_t misses_ = 0;
};

} // namespace armteleop
