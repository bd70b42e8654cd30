#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "armteleop/session.hpp"

namespace armteleop {

class TaskError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class TaskKind { translate, rotate };

std::string task_name(TaskKind k);
TaskKind parse_task_kind(const std::string& name); // throws TaskError

/// Tabletop marker centers in the robot base frame: A-D in a row along x,
/// 0.25 m apart, 0.45 m in front of the base, on a table surface at z = 0.05.
std::map<char, Vec3> default_markers();

struct TaskSpec {
    TaskKind kind = TaskKind::translate;
    char start_marker = 'B';
    char end_marker = 'C';
    std::map<char, Vec3> markers = default_markers();
    double cube_size = 0.06;        // m
    double grasp_threshold = 0.03;  // m, TCP to cube center
    double attach_below_mm = 60.0;  // gripper closing through this grabs
    double detach_above_mm = 80.0;  // opening past this releases
    double place_tolerance = 0.02;  // m, translate: released cube to end marker
    double rotate_target_deg = 90.0;
    double rotate_tolerance_deg = 10.0;
    double rotate_max_shift = 0.02; // m

    /// Throws TaskError for unknown or equal markers, or a cube out of reach.
    void validate(const KinematicChain& chain) const;

    /// Cube center before the task: on the start marker (translate) or
    /// between the two markers (rotate).
    Vec3 cube_start() const;
};

struct SimCube {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    bool attached = false;
};

struct TaskReport {
    TaskKind kind = TaskKind::translate;
    char start_marker = 'B';
    char end_marker = 'C';
    bool success = false;
    std::string reason;            // empty on success
    double robot_motion_time = 0.0; // s, first arm motion to the last release
    std::size_t anomaly_frames = 0;
    std::size_t frames = 0;
    bool grasped = false;
    Vec3 cube_final = Vec3::Zero();
    double placement_error = 0.0;  // m, horizontal, to the goal spot
    double yaw_change_deg = 0.0;
};

/// Runs the grasp proxy over a finished session log.
TaskReport evaluate_task(const TaskSpec& spec, const SessionLog& log);

/// Replays the trace through a fresh session and evaluates it.
TaskReport run_task(const TaskSpec& spec, const Trace& trace, const SessionConfig& cfg);

} // namespace armteleop
