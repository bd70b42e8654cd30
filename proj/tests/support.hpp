#pragma once

// Shared test oracles and drivers. Nothing here calls into the solver under
// test: the inverse solves below are plain Newton iterations on a
// finite-difference Jacobian.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "armteleop/ik_solver.hpp"
#include "armteleop/kinematics.hpp"
#include "armteleop/robot_sim.hpp"

namespace testing {

using namespace armteleop;

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string data_path(const std::string& rel)
{
    return std::string(ARMTELEOP_DATA_DIR) + "/" + rel;
}

inline std::string golden_path(const std::string& rel)
{
    return std::string(ARMTELEOP_GOLDEN_DIR) + "/" + rel;
}

using Vec6 = Eigen::Matrix<double, 6, 1>;

inline Vec6 pose_residual(const KinematicChain& chain, const JointConfig& q, const Pose& target)
{
    const Pose f = forward_kinematics(chain, q);
    Vec6 e;
    e.head<3>() = target.position - f.position;
    const Eigen::AngleAxisd aa(canonical(target.orientation * f.orientation.conjugate()));
    e.tail<3>() = aa.axis() * aa.angle();
    return e;
}

/// Newton on the full pose with a finite-difference Jacobian (6-DOF chains).
inline JointConfig newton_pose(const KinematicChain& chain, JointConfig q, const Pose& target, int iterations = 20)
{
    for (int it = 0; it < iterations; ++it) {
        const Vec6 e = pose_residual(chain, q, target);
        Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, q.size());
        for (Eigen::Index j = 0; j < q.size(); ++j) {
            JointConfig d = q;
            d[j] += 1e-7;
            jac.col(j) = -(pose_residual(chain, d, target) - e) / 1e-7;
        }
        q += jac.colPivHouseholderQr().solve(e);
    }
    return q;
}

/// The 1 m straight tool move used for the motion profile: gripper down,
/// from (-0.5, 0.3, 0.2) to (0.5, 0.3, 0.2) on the reference arm. The end
/// configuration is found by continuation along the line, so both ends sit
/// on the same branch.
struct LineMove {
    JointConfig from;
    JointConfig to;
    Pose start;
    Pose end;
};

inline LineMove one_meter_move(const KinematicChain& chain)
{
    LineMove m;
    m.start = Pose(Vec3(-0.5, 0.3, 0.2), Quat(0.0, 1.0, 0.0, 0.0));
    m.end = Pose(Vec3(0.5, 0.3, 0.2), m.start.orientation);
    JointConfig guess(6);
    guess << 2.601173, 0.942856, -0.912459, -0.030397, 0.0, -2.601173;
    m.from = newton_pose(chain, guess, m.start);
    JointConfig q = m.from;
    for (int i = 1; i <= 200; ++i) {
        const Pose t(m.start.position + (m.end.position - m.start.position) * (i / 200.0), m.start.orientation);
        q = newton_pose(chain, q, t, 8);
    }
    m.to = q;
    return m;
}

/// Tool speed and acceleration by finite differences of sampled positions.
class CapMeter {
public:
    explicit CapMeter(double dt) : dt_(dt) {}

    void add(const Vec3& p)
    {
        if (n_ >= 1) {
            const Vec3 v = (p - prev_) / dt_;
            max_speed_ = std::max(max_speed_, v.norm());
            if (n_ >= 2) max_accel_ = std::max(max_accel_, (v - prev_v_).norm() / dt_);
            prev_v_ = v;
        }
        prev_ = p;
        ++n_;
    }

    double max_speed() const { return max_speed_; }
    double max_accel() const { return max_accel_; }

private:
    double dt_;
    std::size_t n_ = 0;
    Vec3 prev_ = Vec3::Zero();
    Vec3 prev_v_ = Vec3::Zero();
    double max_speed_ = 0.0;
    double max_accel_ = 0.0;
};

struct SuiteResult {
    double max_speed = 0.0;
    double max_accel = 0.0;
    std::size_t targets = 0;
    std::size_t misses = 0;
    bool settled = true;
};

/// Random reachable tabletop targets, gripper down with random yaw, each
/// held for a random time and so often replaced mid-motion. Commands go in
/// with the given latency; the arm is sampled every frame.
inline SuiteResult random_target_suite(std::uint64_t seed, std::size_t n_targets = 30, double latency = 0.1)
{
    const KinematicChain chain = reference_chain();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RobotLimits lim;
    lim.command_latency = latency;
    RobotSimulator sim(chain, lim);
    const double dt = 1.0 / 35.0;
    CapMeter meter(dt);
    meter.add(sim.sample().tcp_pose.position);
    SuiteResult res;
    JointConfig goal = sim.sample().q;
    const Quat down(0.0, 1.0, 0.0, 0.0);
    while (res.targets < n_targets) {
        const Vec3 p(-0.45 + 0.9 * u(rng), 0.25 + 0.35 * u(rng), 0.08 + 0.3 * u(rng));
        const Pose target(p, axis_angle(Vec3::UnitZ(), (u(rng) - 0.5) * 3.14159) * down);
        // stay on the current branch: continue from the last goal
        JointConfig q = goal;
        const Pose from = forward_kinematics(chain, goal);
        bool ok = true;
        for (int i = 1; i <= 40 && ok; ++i) {
            const double s = i / 40.0;
            const Pose t(from.position + s * (target.position - from.position), from.orientation.slerp(s, target.orientation));
            q = newton_pose(chain, q, t, 8);
            ok = pose_residual(chain, q, t).norm() < 1e-9;
        }
        if (!ok || !within_limits(chain, q)) continue;
        goal = q;
        ++res.targets;
        sim.enqueue_command({goal, 145.0 * u(rng)}, sim.sample().time);
        const int hold = static_cast<int>((0.3 + 4.0 * u(rng)) / dt);
        for (int i = 0; i < hold; ++i) meter.add(sim.step(dt).tcp_pose.position);
    }
    for (int i = 0; i < 35 * 30 && sim.moving(); ++i) meter.add(sim.step(dt).tcp_pose.position);
    res.settled = !sim.moving();
    res.max_speed = meter.max_speed();
    res.max_accel = meter.max_accel();
    res.misses = sim.tracking_misses();
    return res;
}

} // namespace testing
