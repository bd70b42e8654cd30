#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "armteleop/pose.hpp"

namespace armteleop {

using JointConfig = Eigen::VectorXd;

/// Malformed chain document (bad JSON, missing or mistyped field).
class ChainParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed document describing an invalid chain.
class ChainValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One revolute joint: a fixed origin transform from the parent frame,
/// followed by a rotation about `axis` (expressed in the origin frame).
struct JointSpec {
    Vec3 axis = Vec3::UnitZ();
    Vec3 origin_translation = Vec3::Zero();
    Quat origin_rotation = Quat::Identity();
    double limit_lo = -1.0;
    double limit_hi = 1.0;
    double max_velocity = 1.0; // rad/s
};

/// Serial chain of revolute joints. Immutable once constructed; the
/// constructor enforces every invariant and throws ChainValidationError.
class KinematicChain {
public:
    KinematicChain(std::vector<JointSpec> joints, Pose base_frame, Pose tool_offset, double reach_radius);

    std::size_t dof() const { return joints_.size(); }
    const std::vector<JointSpec>& joints() const { return joints_; }
    const JointSpec& joint(std::size_t i) const { return joints_.at(i); }
    const Pose& base_frame() const { return base_; }
    const Pose& tool_offset() const { return tool_; }
    double reach_radius() const { return reach_; }

    JointConfig lower_limits() const;
    JointConfig upper_limits() const;
    JointConfig max_velocities() const;

    /// Sum of link translation lengths, an upper bound on how far the tool
    /// can get from the base.
    double geometric_reach_bound() const;

private:
    std::vector<JointSpec> joints_;
    Pose base_;
    Pose tool_;
    double reach_;
};

/// Parses the JSON chain-spec document.
KinematicChain load_chain(std::string_view document);
KinematicChain load_chain_file(const std::string& path);
std::string chain_to_json(const KinematicChain& chain);

/// Tool pose for joint angles q. Throws DimensionError on size mismatch.
Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q);

/// Pose of every joint frame after its rotation, then the tool. Size dof()+1.
std::vector<Pose> joint_frames(const KinematicChain& chain, const JointConfig& q);

JointConfig clamp_to_limits(const KinematicChain& chain, const JointConfig& q);
bool within_limits(const KinematicChain& chain, const JointConfig& q, double slack = 0.0);

/// Necessary reachability condition: p lies inside the (closed) reach sphere.
bool reach_check(const KinematicChain& chain, const Vec3& p);

void check_dimension(const KinematicChain& chain, const JointConfig& q);

/// Two-joint planar arm (0.5 m + 0.3865 m links) used for analytic checks.
KinematicChain planar_test_chain();

/// Default six-joint arm with 0.8865 m reach, home pose gripper-down.
KinematicChain reference_chain();

} // namespace armteleop
