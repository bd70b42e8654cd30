#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace armteleop {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Unit quaternion with non-negative scalar part.
inline Quat canonical(Quat q)
{
    q.normalize();
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

/// Rigid transform: position in meters plus orientation.
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    Pose() = default;
    Pose(const Vec3& p, const Quat& q) : position(p), orientation(canonical(q)) {}

    static Pose identity() { return {}; }

    // this * other, child expressed in this frame
    Pose operator*(const Pose& other) const
    {
        return {position + orientation * other.position, orientation * other.orientation};
    }

    Pose inverse() const
    {
        const Quat inv = orientation.conjugate();
        return {-(inv * position), inv};
    }

    bool operator==(const Pose& other) const
    {
        return position == other.position && orientation.coeffs() == other.orientation.coeffs();
    }
};

struct PoseError {
    double position = 0.0; // meters
    double rotation = 0.0; // radians in [0, pi]
};

/// Euclidean distance and relative rotation angle between two poses.
inline PoseError pose_error(const Pose& a, const Pose& b)
{
    const Quat rel = a.orientation.conjugate() * b.orientation;
    // atan2 form stays accurate near zero, unlike acos(w)
    const double angle = 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
    return {(a.position - b.position).norm(), angle};
}

inline Quat axis_angle(const Vec3& axis, double angle)
{
    return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

// Rotation of q about the world z axis, in (-pi, pi].
inline double yaw_of(const Quat& q)
{
    const Vec3 x = q * Vec3::UnitX();
    return std::atan2(x.y(), x.x());
}

} // namespace armteleop
