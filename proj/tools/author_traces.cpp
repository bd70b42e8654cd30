// Writes the bundled cube-task traces. Each trace is built closed loop: the
// scripted hand waits at every grasp and release point until the simulated
// arm has caught up, then the finished trace is checked with the task runner.
//
//   author_traces OUT_DIR [--config PATH]

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>

#include "armteleop/codec.hpp"
#include "armteleop/config.hpp"
#include "armteleop/task.hpp"

using namespace armteleop;

namespace {

constexpr double kHandSpeed = 0.08; // m/s between waypoints
constexpr double kGraspHeight = 0.08;
constexpr double kCarryHeight = 0.16;

// Scripted operator. The hand starts at a fixed spot in front of the table
// with the mapping at scale 1, so hand displacement equals TCP displacement.
class Author {
public:
    explicit Author(const SessionConfig& cfg) : cfg_(cfg), session_(cfg)
    {
        home_ = forward_kinematics(cfg.chain, JointConfig::Zero(static_cast<Eigen::Index>(cfg.chain.dof())));
        tcp_ = home_.position;
    }

    // Hold still for `seconds`.
    void dwell(double seconds)
    {
        const int n = static_cast<int>(std::lround(seconds * cfg_.frame_rate));
        for (int i = 0; i < n; ++i) emit();
    }

    // Move the TCP goal to p with a smooth start and stop.
    void move_to(const Vec3& p)
    {
        const Vec3 a = tcp_;
        const double dist = (p - a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(1.5 * dist / kHandSpeed * cfg_.frame_rate)));
        for (int i = 1; i <= n; ++i) {
            const double u = 0.5 * (1.0 - std::cos(std::numbers::pi * i / n));
            tcp_ = a + u * (p - a);
            emit();
        }
    }

    // Rotate the hand about the vertical to an absolute yaw (radians).
    void yaw_to(double yaw, double seconds)
    {
        const double y0 = yaw_;
        const int n = static_cast<int>(std::lround(seconds * cfg_.frame_rate));
        for (int i = 1; i <= n; ++i) {
            const double u = 0.5 * (1.0 - std::cos(std::numbers::pi * i / n));
            yaw_ = y0 + u * (yaw - y0);
            emit();
        }
    }

    void aperture_to(double a, double seconds)
    {
        const double a0 = aperture_;
        const int n = std::max(1, static_cast<int>(std::lround(seconds * cfg_.frame_rate)));
        for (int i = 1; i <= n; ++i) {
            aperture_ = a0 + (a - a0) * i / n;
            emit();
        }
    }

    // Keep the hand still until the arm has caught up with the virtual twin
    // and the gripper with its command, then a short settle.
    void wait_for_robot(double max_seconds = 20.0)
    {
        const int limit = static_cast<int>(max_seconds * cfg_.frame_rate);
        for (int i = 0; i < limit; ++i) {
            const FrameOutput out = emit();
            if (out.overlap && std::abs(out.physical.gripper_openness - out.target.openness_mm) < 1.0) break;
        }
        dwell(0.3);
    }

    void event(const MappingEvent& e)
    {
        trace_.push_back(TraceEntry{t(), e});
        session_.apply_event(e);
    }

    // Moves the hand without moving the goal, as when re-gripping while frozen.
    void shift_hand(const Vec3& d) { hand_shift_ += d; }

    const Trace& trace() const { return trace_; }

private:
    double t() const { return static_cast<double>(frame_) / cfg_.frame_rate; }

    FrameOutput emit()
    {
        const Vec3 hand_origin(0.2, -0.4, 1.1);
        const Vec3 hand_pos = hand_origin + (tcp_ - home_.position) + hand_shift_;
        const HandSample h(Pose(hand_pos, axis_angle(Vec3::UnitZ(), yaw_)), aperture_, t());
        trace_.push_back(TraceEntry{h.timestamp, h});
        ++frame_;
        return session_.tick(h);
    }

    SessionConfig cfg_;
    Session session_;
    Pose home_;
    Vec3 tcp_;
    Vec3 hand_shift_ = Vec3::Zero();
    double yaw_ = 0.0;
    double aperture_ = 0.0;
    std::size_t frame_ = 0;
    Trace trace_;
};

Trace translate_trace(const SessionConfig& cfg, const TaskSpec& spec, bool grasp)
{
    const Vec3 from = spec.markers.at(spec.start_marker);
    const Vec3 to = spec.markers.at(spec.end_marker);
    Author a(cfg);
    a.dwell(0.5);
    a.aperture_to(1.0, 1.0);
    a.move_to(Vec3(from.x(), from.y(), kCarryHeight));
    // clutch: pause, bring the hand back a little, resume
    a.event(event::Freeze{});
    a.shift_hand(Vec3(0.0, -0.05, 0.0));
    a.dwell(0.5);
    a.event(event::Unfreeze{});
    a.move_to(Vec3(from.x(), from.y(), kGraspHeight));
    a.wait_for_robot();
    if (grasp) {
        a.aperture_to(0.2, 1.0);
        a.wait_for_robot();
    } else {
        a.dwell(1.0);
    }
    a.move_to(Vec3(from.x(), from.y(), kCarryHeight));
    a.move_to(Vec3(to.x(), to.y(), kCarryHeight));
    a.move_to(Vec3(to.x(), to.y(), kGraspHeight));
    a.wait_for_robot();
    a.aperture_to(1.0, 1.0);
    a.wait_for_robot();
    a.move_to(Vec3(to.x(), to.y(), kCarryHeight));
    a.wait_for_robot();
    return a.trace();
}

Trace rotate_trace(const SessionConfig& cfg, const TaskSpec& spec)
{
    const Vec3 c = spec.cube_start();
    Author a(cfg);
    a.dwell(0.5);
    a.aperture_to(1.0, 1.0);
    a.move_to(Vec3(c.x(), c.y(), kCarryHeight));
    a.move_to(Vec3(c.x(), c.y(), kGraspHeight));
    a.wait_for_robot();
    a.aperture_to(0.2, 1.0);
    a.wait_for_robot();
    a.move_to(Vec3(c.x(), c.y(), kGraspHeight + 0.03));
    a.yaw_to(std::numbers::pi / 2.0, 3.0);
    a.move_to(Vec3(c.x(), c.y(), kGraspHeight));
    a.wait_for_robot();
    a.aperture_to(1.0, 1.0);
    a.wait_for_robot();
    a.move_to(Vec3(c.x(), c.y(), kCarryHeight));
    a.wait_for_robot();
    return a.trace();
}

bool write_checked(const std::filesystem::path& path, const Trace& trace, const TaskSpec& spec,
                   const SessionConfig& cfg, bool expect_success)
{
    std::ofstream out(path, std::ios::trunc);
    write_trace(out, trace);
    out.close();
    // re-read from disk so the check covers the serialized form
    const TaskReport rep = run_task(spec, load_trace(path.string()), cfg);
    std::cout << path.filename().string() << ": " << trace.size() << " lines, success=" << rep.success
              << (rep.reason.empty() ? "" : " (" + rep.reason + ")") << ", robot motion " << rep.robot_motion_time
              << " s, anomaly frames " << rep.anomaly_frames << "\n";
    return rep.success == expect_success;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Write the bundled cube-task traces"};
    std::string out_dir, config_path;
    app.add_option("out_dir", out_dir, "output directory")->required();
    app.add_option("--config", config_path, "config JSON");
    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg;
        cfg.markers = default_markers();
        if (!config_path.empty()) cfg = load_config(config_path);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);

        TaskSpec translate;
        translate.kind = TaskKind::translate;
        translate.markers = cfg.markers;
        TaskSpec rotate = translate;
        rotate.kind = TaskKind::rotate;

        bool ok = true;
        ok &= write_checked(dir / "translate_B_C.ndjson", translate_trace(cfg.session, translate, true), translate,
                            cfg.session, true);
        ok &= write_checked(dir / "translate_B_C_no_grasp.ndjson", translate_trace(cfg.session, translate, false),
                            translate, cfg.session, false);
        ok &= write_checked(dir / "rotate_B_C.ndjson", rotate_trace(cfg.session, rotate), rotate, cfg.session, true);
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
