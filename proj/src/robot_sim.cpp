#include "armteleop/robot_sim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "armteleop/mapping.hpp"

namespace armteleop {

namespace {

constexpr double kReleaseSlack = 1e-9;
// Joints this close to the command when the reference arrives snap onto it.
constexpr double kSnap = 1e-3;
constexpr double kDamping = 1e-4;
constexpr double kFollowTolerance = 1e-7; // m
// Joint mode hands back to the line once every joint is this close.
constexpr double kRejoin = 0.1; // rad
constexpr double kBrakeJointOverspeed = 2.0;
// Braking is checked as if it started this many sub-steps late, and
// sampled at this many points.
constexpr int kStopLookahead = 3;
constexpr int kStopSamples = 16;
// Share of the tool acceleration cap for each of the two terms in joint mode.
constexpr double kJointShare = 0.45;

// Fastest speed at which a distance `dist` can still be covered and the
// motion stopped exactly, with deceleration `a` applied in steps of h.
double braking_speed(double dist, double a, double h)
{
    return a * h * (std::sqrt(0.25 + 2.0 * dist / (a * h * h)) - 0.5);
}

template <class V>
struct Approach {
    V v;
    bool lands = false;
};

// One sub-step toward a point `e` away: aim at the fastest speed that can
// still stop there, change velocity by at most dv_max.
template <class V>
Approach<V> approach(const V& e, const V& v, double vmax, double a, double h, double dv_max)
{
    const V exact = e / h;
    if ((exact - v).norm() <= dv_max && exact.norm() <= std::min(vmax, a * h)) return {exact, true};
    const double d = e.norm();
    V want = V::Zero(e.size());
    if (d > 0.0) want = e * (std::min(vmax, braking_speed(d, a, h)) / d);
    V dv = want - v;
    const double n = dv.norm();
    if (n > dv_max) dv *= dv_max / n;
    return {v + dv, false};
}

// Velocity after braking by at most dv.
Vec3 brake(const Vec3& v, double dv)
{
    const double n = v.norm();
    return n <= dv ? Vec3::Zero() : Vec3(v * ((n - dv) / n));
}

Vec3 rotation_vector(const Quat& q)
{
    const Eigen::AngleAxisd aa(canonical(q));
    return aa.angle() == 0.0 ? Vec3::Zero() : Vec3(aa.axis() * aa.angle());
}

Quat exp_map(const Vec3& w)
{
    const double angle = w.norm();
    return angle == 0.0 ? Quat::Identity() : Quat(Eigen::AngleAxisd(angle, w / angle));
}

// J^T (J J^T + damping^2 I)^-1
Eigen::MatrixXd damped_inverse(const Eigen::MatrixXd& j)
{
    const Eigen::MatrixXd jjt = j * j.transpose() + kDamping * kDamping * Eigen::MatrixXd::Identity(j.rows(), j.rows());
    return j.transpose() * jjt.ldlt().solve(Eigen::MatrixXd::Identity(j.rows(), j.rows()));
}

} // namespace

void RobotLimits::validate() const
{
    if (!(max_line_velocity > 0.0) || !(max_line_acceleration > 0.0) || !(gripper_speed > 0.0) ||
        !(command_latency >= 0.0) || !(max_angular_velocity > 0.0) || !(max_angular_acceleration > 0.0)) {
        throw std::invalid_argument("robot limits must be positive (latency non-negative)");
    }
}

RobotSimulator::RobotSimulator(KinematicChain chain, RobotLimits limits)
    : RobotSimulator(chain, limits, JointConfig::Zero(static_cast<Eigen::Index>(chain.dof())))
{
}

RobotSimulator::RobotSimulator(KinematicChain chain, RobotLimits limits, JointConfig home)
    : chain_(std::move(chain)), limits_(limits)
{
    limits_.validate();
    check_dimension(chain_, home);
    if (!within_limits(chain_, home)) {
        throw CommandRejected("home configuration outside joint limits");
    }
    state_.q = std::move(home);
    state_.joint_velocities = JointConfig::Zero(state_.q.size());
    state_.gripper_openness = 0.0;
    state_.time = 0.0;
    state_.tcp_pose = forward_kinematics(chain_, state_.q);
    ref_.p = state_.tcp_pose.position;
    ref_.r = state_.tcp_pose.orientation;

    // Joint mode bounds. With lever_j the longest distance from joint j to
    // the tool, tool speed <= G |qdot| and tool acceleration <=
    // G |qddot| + 2 n R |qdot|^2, where G = sqrt(sum lever_j^2) and R the
    // longest lever.
    const std::size_t n = chain_.dof();
    double lever = chain_.tool_offset().position.norm();
    double g2 = 0.0, r = 0.0;
    for (std::size_t j = n; j-- > 0;) {
        lever += chain_.joint(j).origin_translation.norm();
        g2 += lever * lever;
        r = std::max(r, lever);
    }
    const double g = std::max(std::sqrt(g2), 1e-9);
    const double a = limits_.max_line_acceleration;
    joint_speed_ = std::min(limits_.max_line_velocity / g,
                            std::sqrt(kJointShare * a / (2.0 * static_cast<double>(n) * std::max(r, 1e-9))));
    joint_speed_ = std::min(joint_speed_, chain_.max_velocities().minCoeff());
    joint_accel_ = kJointShare * a / g;
}

void RobotSimulator::enqueue_command(const JointCommand& cmd, double now)
{
    if (static_cast<std::size_t>(cmd.q.size()) != chain_.dof()) {
        throw CommandRejected("command has wrong joint count");
    }
    if (!within_limits(chain_, cmd.q)) {
        throw CommandRejected("command outside joint limits");
    }
    if (!std::isfinite(cmd.openness_mm) || !std::isfinite(now)) {
        throw CommandRejected("command has non-finite values");
    }
    Queued item{now + limits_.command_latency, cmd};
    item.cmd.openness_mm = std::clamp(cmd.openness_mm, 0.0, kMaxOpennessMm);
    if (!queue_.empty()) {
        item.release = std::max(item.release, queue_.back().release);
    }
    queue_.push_back(std::move(item));
}

RobotState RobotSimulator::step(double dt)
{
    if (!(dt > 0.0) || dt > 0.1 + 1e-12) {
        throw std::invalid_argument("step: dt must be in (0, 0.1] s");
    }
    const double t_end = state_.time + dt;
    double t = state_.time;
    while (t_end - t > 1e-12) {
        release_due(t);
        // split what is left evenly, and stop at the next release
        const double left = t_end - t;
        double next = t + left / std::ceil(left / kMaxSubstep - 1e-9);
        if (!queue_.empty() && queue_.front().release < next) next = queue_.front().release;
        if (next > t_end - 1e-12) next = t_end;
        advance(next - t);
        t = next;
    }
    release_due(t_end);
    state_.time = t_end;
    return state_;
}

bool RobotSimulator::moving() const
{
    if (!goal_) return false;
    if (mode_ != Mode::line) return true;
    return !at_goal() || !state_.joint_velocities.isZero(0.0);
}

bool RobotSimulator::at_goal() const
{
    return ref_.p == goal_pose_.position && ref_.r.coeffs() == goal_pose_.orientation.coeffs() && ref_.v.isZero(0.0) &&
           ref_.w.isZero(0.0);
}

void RobotSimulator::release_due(double t)
{
    while (!queue_.empty() && queue_.front().release <= t + kReleaseSlack) {
        goal_ = queue_.front().cmd.q;
        goal_pose_ = forward_kinematics(chain_, *goal_);
        gripper_goal_ = queue_.front().cmd.openness_mm;
        queue_.pop_front();
    }
}

bool RobotSimulator::follow(JointConfig& q, const Vec3& p, const Quat& r) const
{
    const Eigen::Index n = q.size();
    Eigen::MatrixXd jp(3, n), jo(3, n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    for (int it = 0; it < 12; ++it) {
        const std::vector<Pose> frames = joint_frames(chain_, q);
        const Pose& tool = frames.back();
        const Vec3 ep = p - tool.position;
        const Vec3 eo = rotation_vector(r * tool.orientation.conjugate());
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::size_t i = static_cast<std::size_t>(j);
            const Vec3 z = frames[i].orientation * chain_.joint(i).axis.normalized();
            jp.col(j) = z.cross(tool.position - frames[i].position);
            jo.col(j) = z;
        }
        // position first, orientation with what is left
        const Eigen::MatrixXd pinv_p = damped_inverse(jp);
        const JointConfig dq1 = pinv_p * ep;
        const Eigen::MatrixXd null = eye - pinv_p * jp;
        const JointConfig dq = dq1 + null * (damped_inverse(jo * null) * (eo - jo * dq1));
        q = clamp_to_limits(chain_, q + dq);
        if (dq.norm() < 1e-12) break;
    }
    return (forward_kinematics(chain_, q).position - p).norm() <= kFollowTolerance;
}

bool RobotSimulator::can_stop(const JointConfig& q) const
{
    const double v = ref_.v.norm(), w = ref_.w.norm();
    if (v == 0.0 && w == 0.0) return true;
    const double a = limits_.max_line_acceleration;
    const double alpha = limits_.max_angular_acceleration;
    const Vec3 vdir = v > 0.0 ? Vec3(ref_.v / v) : Vec3::Zero();
    const Vec3 wdir = w > 0.0 ? Vec3(ref_.w / w) : Vec3::Zero();
    // coast for a few sub-steps, then brake on both at full deceleration
    const double coast = kStopLookahead * kMaxSubstep;
    auto along = [](double speed, double dec, double t) {
        const double tb = std::min(t, speed / dec);
        return speed * tb - 0.5 * dec * tb * tb;
    };
    const double total = coast + std::max(v / a, w / alpha);
    JointConfig prev = q;
    double t_prev = 0.0;
    for (int k = 1; k <= kStopSamples; ++k) {
        const double t = total * k / kStopSamples;
        const double tb = std::max(0.0, t - coast);
        const Vec3 p = ref_.p + vdir * (v * std::min(t, coast) + along(v, a, tb));
        const Quat r = canonical(ref_.r * exp_map(wdir * (w * std::min(t, coast) + along(w, alpha, tb))));
        JointConfig next = prev;
        if (!follow(next, p, r)) return false;
        const JointConfig rate = (next - prev) / (t - t_prev);
        for (Eigen::Index j = 0; j < rate.size(); ++j) {
            if (std::abs(rate[j]) > chain_.joint(static_cast<std::size_t>(j)).max_velocity) return false;
        }
        prev = std::move(next);
        t_prev = t;
    }
    return true;
}

bool RobotSimulator::line_step(double h, double span, JointConfig& next)
{
    const double a = limits_.max_line_acceleration;
    const double alpha = limits_.max_angular_acceleration;
    if (mode_ == Mode::line) {
        const auto lin = approach<Vec3>(goal_pose_.position - ref_.p, ref_.v, limits_.max_line_velocity, a, h, a * span);
        ref_.v = lin.v;
        ref_.p = lin.lands ? goal_pose_.position : Vec3(ref_.p + h * ref_.v);
        const auto ang = approach<Vec3>(rotation_vector(ref_.r.conjugate() * goal_pose_.orientation), ref_.w,
                                        limits_.max_angular_velocity, alpha, h, alpha * span);
        ref_.w = ang.v;
        ref_.r = ang.lands ? goal_pose_.orientation : canonical(ref_.r * exp_map(h * ref_.w));
    } else {
        ref_.v = brake(ref_.v, a * span);
        ref_.p += h * ref_.v;
        ref_.w = brake(ref_.w, alpha * span);
        ref_.r = canonical(ref_.r * exp_map(h * ref_.w));
    }

    next = clamp_to_limits(chain_, state_.q + h * state_.joint_velocities);
    bool followed = follow(next, ref_.p, ref_.r);
    const JointConfig step = next - state_.q;
    double shrink = 1.0;
    // While braking the tool caps come first; joints may briefly run past
    // their own limit near singular poses.
    const double over = mode_ == Mode::brake ? kBrakeJointOverspeed : 1.0;
    for (Eigen::Index j = 0; j < step.size(); ++j) {
        const double cap = over * chain_.joint(static_cast<std::size_t>(j)).max_velocity * h;
        if (std::abs(step[j]) > cap) shrink = std::min(shrink, cap / std::abs(step[j]));
    }
    if (shrink < 1.0) {
        next = state_.q + shrink * step;
        followed = false;
    }
    if (followed && mode_ == Mode::line && !can_stop(next)) followed = false;
    return followed;
}

void RobotSimulator::joint_step(double h, double span)
{
    const JointConfig e = *goal_ - state_.q;
    const auto st = approach<JointConfig>(e, state_.joint_velocities, joint_speed_, joint_accel_, h, joint_accel_ * span);
    const JointConfig next = st.lands ? *goal_ : clamp_to_limits(chain_, state_.q + h * st.v);
    const Pose tool = forward_kinematics(chain_, next);
    state_.joint_velocities = (next - state_.q) / h;
    if (st.lands || (*goal_ - next).cwiseAbs().maxCoeff() <= kRejoin) {
        // back to the line, starting from the tool's current motion
        ref_.v = (tool.position - state_.tcp_pose.position) / h;
        ref_.w = rotation_vector(state_.tcp_pose.orientation.conjugate() * tool.orientation) / h;
        ref_.p = tool.position;
        ref_.r = tool.orientation;
        if (st.lands) {
            ref_.v.setZero();
            ref_.w.setZero();
            ref_.p = goal_pose_.position;
            ref_.r = goal_pose_.orientation;
        }
        mode_ = Mode::line;
    }
    state_.q = next;
    state_.tcp_pose = tool;
}

void RobotSimulator::advance(double h)
{
    const double g_step = limits_.gripper_speed * h;
    state_.gripper_openness += std::clamp(gripper_goal_ - state_.gripper_openness, -g_step, g_step);
    state_.gripper_openness = std::clamp(state_.gripper_openness, 0.0, kMaxOpennessMm);

    if (!moving()) {
        state_.joint_velocities.setZero();
        last_h_ = 0.0;
        return;
    }
    // Velocity changes are spread over the time between sub-step centers,
    // so finite differences over any run of sub-steps respect the caps.
    const double span = last_h_ > 0.0 ? 0.5 * (last_h_ + h) : h;
    last_h_ = h;
    if (mode_ == Mode::joint) {
        joint_step(h, span);
        return;
    }

    const Reference saved = ref_;
    JointConfig next;
    bool followed = line_step(h, span, next);
    if (!followed && mode_ == Mode::line) {
        // cannot go on along the line: stop on it instead
        ref_ = saved;
        mode_ = Mode::brake;
        followed = line_step(h, span, next);
    }
    const Pose tool = forward_kinematics(chain_, next);
    if (!followed) {
        ++misses_;
        // not even braking works: take what the joints did and go to joint mode
        mode_ = Mode::joint;
    }
    if (mode_ == Mode::line && at_goal() && (next - *goal_).cwiseAbs().maxCoeff() <= kSnap) next = *goal_;
    state_.joint_velocities = (next - state_.q) / h;
    if (mode_ == Mode::joint) {
        const double speed = state_.joint_velocities.norm();
        if (speed > joint_speed_) state_.joint_velocities *= joint_speed_ / speed;
    }
    if (mode_ == Mode::brake && ref_.v.isZero(0.0) && ref_.w.isZero(0.0)) mode_ = Mode::joint;
    state_.q = std::move(next);
    state_.tcp_pose = tool;
}

} // namespace armteleop
