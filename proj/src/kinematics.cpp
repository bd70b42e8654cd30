#include "armteleop/kinematics.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace armteleop {

using nlohmann::json;

namespace {

constexpr double kAxisNormTolerance = 1e-9;

Vec3 read_vec3(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3) {
        throw ChainParseError(std::string(what) + ": expected array of 3 numbers");
    }
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) {
            throw ChainParseError(std::string(what) + ": expected number");
        }
        v[i] = j[i].get<double>();
    }
    return v;
}

Quat read_quat(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 4) {
        throw ChainParseError(std::string(what) + ": expected [w,x,y,z]");
    }
    for (const auto& e : j) {
        if (!e.is_number()) {
            throw ChainParseError(std::string(what) + ": expected number");
        }
    }
    const Quat q(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
    if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) {
        throw ChainValidationError(std::string(what) + ": degenerate quaternion");
    }
    return canonical(q);
}

double read_number(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw ChainParseError(std::string("missing or non-numeric field '") + key + "'");
    }
    return it->get<double>();
}

const json& require(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ChainParseError(std::string("missing field '") + key + "'");
    }
    return *it;
}

Pose read_pose(const json& j, const char* what)
{
    if (!j.is_object()) {
        throw ChainParseError(std::string(what) + ": expected pose object");
    }
    return {read_vec3(require(j, "t"), what), read_quat(require(j, "q"), what)};
}

json pose_json(const Pose& p)
{
    const auto& q = p.orientation;
    return {{"t", {p.position.x(), p.position.y(), p.position.z()}}, {"q", {q.w(), q.x(), q.y(), q.z()}}};
}

} // namespace

KinematicChain::KinematicChain(std::vector<JointSpec> joints, Pose base_frame, Pose tool_offset, double reach_radius)
    : joints_(std::move(joints)), base_(base_frame), tool_(tool_offset), reach_(reach_radius)
{
    if (joints_.empty()) {
        throw ChainValidationError("chain needs at least one joint");
    }
    if (!(reach_ > 0.0) || !std::isfinite(reach_)) {
        throw ChainValidationError("reach_radius must be positive");
    }
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        auto& j = joints_[i];
        const std::string tag = "joint " + std::to_string(i) + ": ";
        const double n = j.axis.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw ChainValidationError(tag + "zero axis");
        }
        j.axis /= n;
        if (std::abs(j.axis.norm() - 1.0) >= kAxisNormTolerance) {
            throw ChainValidationError(tag + "axis not normalizable");
        }
        j.origin_rotation = canonical(j.origin_rotation);
        if (!std::isfinite(j.limit_lo) || !std::isfinite(j.limit_hi) || !(j.limit_lo < j.limit_hi)) {
            throw ChainValidationError(tag + "limit_lo must be < limit_hi");
        }
        if (!(j.max_velocity > 0.0) || !std::isfinite(j.max_velocity)) {
            throw ChainValidationError(tag + "max_velocity must be positive");
        }
    }
}

JointConfig KinematicChain::lower_limits() const
{
    JointConfig v(dof());
    for (std::size_t i = 0; i < dof(); ++i) v[i] = joints_[i].limit_lo;
    return v;
}

JointConfig KinematicChain::upper_limits() const
{
    JointConfig v(dof());
    for (std::size_t i = 0; i < dof(); ++i) v[i] = joints_[i].limit_hi;
    return v;
}

JointConfig KinematicChain::max_velocities() const
{
    JointConfig v(dof());
    for (std::size_t i = 0; i < dof(); ++i) v[i] = joints_[i].max_velocity;
    return v;
}

double KinematicChain::geometric_reach_bound() const
{
    double sum = tool_.position.norm();
    // the first origin is measured from the base frame itself
    for (const auto& j : joints_) sum += j.origin_translation.norm();
    return sum;
}

KinematicChain load_chain(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ChainParseError(std::string("chain document: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ChainParseError("chain document must be a JSON object");
    }
    const Pose base = read_pose(require(doc, "base"), "base");
    const Pose tool = read_pose(require(doc, "tool"), "tool");
    const double reach = read_number(doc, "reach_radius_m");
    const json& joints_json = require(doc, "joints");
    if (!joints_json.is_array()) {
        throw ChainParseError("'joints' must be an array");
    }
    std::vector<JointSpec> joints;
    for (const auto& jj : joints_json) {
        if (!jj.is_object()) {
            throw ChainParseError("joint entry must be an object");
        }
        JointSpec s;
        s.axis = read_vec3(require(jj, "axis"), "axis");
        s.origin_translation = read_vec3(require(jj, "origin_t"), "origin_t");
        s.origin_rotation = read_quat(require(jj, "origin_q"), "origin_q");
        const json& lim = require(jj, "limits");
        if (!lim.is_array() || lim.size() != 2 || !lim[0].is_number() || !lim[1].is_number()) {
            throw ChainParseError("limits: expected [lo, hi]");
        }
        s.limit_lo = lim[0].get<double>();
        s.limit_hi = lim[1].get<double>();
        s.max_velocity = read_number(jj, "max_vel");
        joints.push_back(s);
    }
    return KinematicChain(std::move(joints), base, tool, reach);
}

KinematicChain load_chain_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ChainParseError("cannot open chain file: " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return load_chain(ss.str());
}

std::string chain_to_json(const KinematicChain& chain)
{
    json joints = json::array();
    for (const auto& j : chain.joints()) {
        const auto& q = j.origin_rotation;
        joints.push_back({{"axis", {j.axis.x(), j.axis.y(), j.axis.z()}},
                          {"origin_t", {j.origin_translation.x(), j.origin_translation.y(), j.origin_translation.z()}},
                          {"origin_q", {q.w(), q.x(), q.y(), q.z()}},
                          {"limits", {j.limit_lo, j.limit_hi}},
                          {"max_vel", j.max_velocity}});
    }
    json doc = {{"base", pose_json(chain.base_frame())},
                {"tool", pose_json(chain.tool_offset())},
                {"reach_radius_m", chain.reach_radius()},
                {"joints", joints}};
    return doc.dump(2);
}

void check_dimension(const KinematicChain& chain, const JointConfig& q)
{
    if (static_cast<std::size_t>(q.size()) != chain.dof()) {
        throw DimensionError("joint vector has " + std::to_string(q.size()) + " entries, chain has " +
                             std::to_string(chain.dof()) + " joints");
    }
}

Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q)
{
    check_dimension(chain, q);
    Vec3 p = chain.base_frame().position;
    Quat r = chain.base_frame().orientation;
    const auto& joints = chain.joints();
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const auto& j = joints[i];
        p += r * j.origin_translation;
        r = r * j.origin_rotation * Quat(Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], j.axis));
    }
    p += r * chain.tool_offset().position;
    r = r * chain.tool_offset().orientation;
    return {p, r};
}

std::vector<Pose> joint_frames(const KinematicChain& chain, const JointConfig& q)
{
    check_dimension(chain, q);
    std::vector<Pose> frames;
    frames.reserve(chain.dof() + 1);
    Pose t = chain.base_frame();
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        const auto& j = chain.joint(i);
        t = t * Pose(j.origin_translation, j.origin_rotation) *
            Pose(Vec3::Zero(), Quat(Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], j.axis)));
        frames.push_back(t);
    }
    frames.push_back(t * chain.tool_offset());
    return frames;
}

JointConfig clamp_to_limits(const KinematicChain& chain, const JointConfig& q)
{
    check_dimension(chain, q);
    JointConfig out(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const auto& j = chain.joint(static_cast<std::size_t>(i));
        out[i] = std::clamp(q[i], j.limit_lo, j.limit_hi);
    }
    return out;
}

bool within_limits(const KinematicChain& chain, const JointConfig& q, double slack)
{
    if (static_cast<std::size_t>(q.size()) != chain.dof()) return false;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const auto& j = chain.joint(static_cast<std::size_t>(i));
        if (!std::isfinite(q[i]) || q[i] < j.limit_lo - slack || q[i] > j.limit_hi + slack) return false;
    }
    return true;
}

bool reach_check(const KinematicChain& chain, const Vec3& p)
{
    return (p - chain.base_frame().position).norm() <= chain.reach_radius();
}

KinematicChain planar_test_chain()
{
    JointSpec shoulder;
    shoulder.axis = Vec3::UnitZ();
    shoulder.limit_lo = -std::numbers::pi;
    shoulder.limit_hi = std::numbers::pi;
    shoulder.max_velocity = 3.0;
    JointSpec elbow = shoulder;
    elbow.origin_translation = Vec3(0.5, 0.0, 0.0);
    return KinematicChain({shoulder, elbow}, Pose::identity(), Pose(Vec3(0.3865, 0.0, 0.0), Quat::Identity()), 0.8865);
}

KinematicChain reference_chain()
{
    // Link lengths sum to the 0.8865 m reach: 0.12 + 0.35 + 0.30 + 0.05 + 0.0365 + 0.03.
    const double lim = 175.0 * std::numbers::pi / 180.0;
    auto joint = [lim](Vec3 axis, Vec3 origin, double vmax) {
        JointSpec j;
        j.axis = axis;
        j.origin_translation = origin;
        j.limit_lo = -lim;
        j.limit_hi = lim;
        j.max_velocity = vmax;
        return j;
    };
    std::vector<JointSpec> joints{
        joint(Vec3::UnitZ(), Vec3(0.0, 0.0, 0.0), 2.6),     // base yaw
        joint(Vec3::UnitY(), Vec3(0.0, 0.0, 0.12), 2.6),    // shoulder
        joint(Vec3::UnitY(), Vec3(0.0, 0.0, 0.35), 2.6),    // elbow, upper arm vertical at home
        joint(Vec3::UnitY(), Vec3(0.30, 0.0, 0.0), 3.1),    // wrist pitch, forearm horizontal at home
        joint(Vec3::UnitX(), Vec3(0.0, 0.0, -0.05), 3.1),   // wrist roll
        joint(Vec3::UnitZ(), Vec3(0.0, 0.0, -0.0365), 3.1), // flange
    };
    // Tool z axis points down at home.
    const Pose tool(Vec3(0.0, 0.0, -0.03), Quat(0.0, 1.0, 0.0, 0.0));
    return KinematicChain(std::move(joints), Pose::identity(), tool, 0.8865);
}

} // namespace armteleop
