#include "armteleop/task.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace armteleop {

namespace {

constexpr double kTableZ = 0.05;
constexpr double kMotionThreshold = 1e-3; // m of TCP travel that counts as moving

std::string cm(double m)
{
    std::ostringstream os;
    os.precision(1);
    os << std::fixed << m * 100.0 << " cm";
    return os.str();
}

} // namespace

std::string task_name(TaskKind k)
{
    return k == TaskKind::translate ? "translate" : "rotate";
}

TaskKind parse_task_kind(const std::string& name)
{
    if (name == "translate") return TaskKind::translate;
    if (name == "rotate") return TaskKind::rotate;
    throw TaskError("unknown task \"" + name + "\" (translate or rotate)");
}

std::map<char, Vec3> default_markers()
{
    return {{'A', Vec3(-0.375, 0.45, kTableZ)},
            {'B', Vec3(-0.125, 0.45, kTableZ)},
            {'C', Vec3(0.125, 0.45, kTableZ)},
            {'D', Vec3(0.375, 0.45, kTableZ)}};
}

void TaskSpec::validate(const KinematicChain& chain) const
{
    for (const char m : {start_marker, end_marker}) {
        if (!markers.count(m)) throw TaskError(std::string("unknown marker '") + m + "'");
    }
    if (start_marker == end_marker) throw TaskError("start and end markers must differ");
    if (!(cube_size > 0.0) || !(grasp_threshold > 0.0)) throw TaskError("cube size and grasp threshold must be positive");
    if (!(attach_below_mm < detach_above_mm)) throw TaskError("attach threshold must be below detach threshold");
    for (const char m : {start_marker, end_marker}) {
        const Vec3 c = markers.at(m) + Vec3(0, 0, 0.5 * cube_size);
        if (!reach_check(chain, c)) throw TaskError(std::string("marker '") + m + "' is out of reach");
    }
    if (!reach_check(chain, cube_start())) throw TaskError("cube start is out of reach");
}

Vec3 TaskSpec::cube_start() const
{
    const Vec3 lift(0, 0, 0.5 * cube_size);
    if (kind == TaskKind::translate) return markers.at(start_marker) + lift;
    return 0.5 * (markers.at(start_marker) + markers.at(end_marker)) + lift;
}

TaskReport evaluate_task(const TaskSpec& spec, const SessionLog& log)
{
    TaskReport rep;
    rep.kind = spec.kind;
    rep.start_marker = spec.start_marker;
    rep.end_marker = spec.end_marker;
    rep.frames = log.size();

    SimCube cube;
    cube.position = spec.cube_start();
    const Vec3 origin = cube.position;
    const Quat q0 = cube.orientation;
    const double rest_z = cube.position.z();

    Pose grip_in_tcp; // cube pose relative to the TCP while attached
    std::optional<Vec3> start_tcp;
    std::optional<double> motion_start;
    double last_release = -1.0;
    double prev_open = log.empty() ? 0.0 : log.front().out.physical.gripper_openness;

    for (const LogRecord& r : log) {
        const RobotState& s = r.out.physical;
        if (r.out.anomaly) ++rep.anomaly_frames;
        if (!start_tcp) start_tcp = s.tcp_pose.position;
        if (!motion_start && (s.tcp_pose.position - *start_tcp).norm() > kMotionThreshold) {
            motion_start = s.time;
        }

        const double open = s.gripper_openness;
        if (cube.attached) {
            const Pose p = s.tcp_pose * grip_in_tcp;
            cube.position = p.position;
            cube.orientation = p.orientation;
            if (open > spec.detach_above_mm) {
                cube.attached = false;
                cube.position.z() = rest_z; // falls back onto the table
                last_release = s.time;
            }
        } else if (prev_open >= spec.attach_below_mm && open < spec.attach_below_mm &&
                   (s.tcp_pose.position - cube.position).norm() <= spec.grasp_threshold) {
            cube.attached = true;
            rep.grasped = true;
            grip_in_tcp = s.tcp_pose.inverse() * Pose(cube.position, cube.orientation);
        }
        prev_open = open;
    }

    rep.cube_final = cube.position;
    rep.yaw_change_deg = yaw_of(cube.orientation * q0.conjugate()) * 180.0 / std::numbers::pi;
    if (motion_start) {
        const double end = last_release >= 0.0 ? last_release : (log.empty() ? 0.0 : log.back().out.time);
        rep.robot_motion_time = std::max(0.0, end - *motion_start);
    }

    const Vec3 goal = spec.kind == TaskKind::translate ? Vec3(spec.markers.at(spec.end_marker)) : origin;
    rep.placement_error = (cube.position - goal).head<2>().norm();

    if (!rep.grasped) {
        rep.reason = "never grasped";
    } else if (cube.attached) {
        rep.reason = "cube never released";
    } else if (spec.kind == TaskKind::translate) {
        if (rep.placement_error > spec.place_tolerance) {
            rep.reason = "released " + cm(rep.placement_error) + " from marker " + spec.end_marker;
        }
    } else {
        const double miss = std::abs(std::abs(rep.yaw_change_deg) - spec.rotate_target_deg);
        if (miss > spec.rotate_tolerance_deg) {
            std::ostringstream os;
            os.precision(1);
            os << std::fixed << "yaw changed " << rep.yaw_change_deg << " deg";
            rep.reason = os.str();
        } else if (rep.placement_error > spec.rotate_max_shift) {
            rep.reason = "cube moved " + cm(rep.placement_error);
        }
    }
    rep.success = rep.reason.empty();
    return rep;
}

TaskReport run_task(const TaskSpec& spec, const Trace& trace, const SessionConfig& cfg)
{
    spec.validate(cfg.chain);
    return evaluate_task(spec, replay(cfg, trace));
}

} // namespace armteleop
