#include "armteleop/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace armteleop {

namespace {

MappingState reanchored(MappingState ms, const HandSample& hand, const Pose& gripper)
{
    ms.hand_anchor = hand.pose;
    // factor the offset out so the target at the anchor sample is exactly `gripper`
    ms.gripper_anchor = Pose(gripper.position, ms.rotation_offset.conjugate() * gripper.orientation);
    ms.held = GripperTarget{gripper, map_openness(hand.aperture)};
    return ms;
}

} // namespace

HandSample::HandSample(Pose p, double a, double t)
    : pose(p), aperture(std::isfinite(a) ? std::clamp(a, 0.0, 1.0) : 0.0), timestamp(t)
{
}

bool MappingState::operator==(const MappingState& o) const
{
    return frozen == o.frozen && hand_anchor == o.hand_anchor && gripper_anchor == o.gripper_anchor &&
           scale == o.scale && mirror_x == o.mirror_x && mirror_y == o.mirror_y &&
           rotation_offset.coeffs() == o.rotation_offset.coeffs() && held.pose == o.held.pose &&
           held.openness_mm == o.held.openness_mm;
}

MappingState new_mapping(const HandSample& hand, const Pose& gripper_pose)
{
    MappingState ms;
    ms.hand_anchor = hand.pose;
    ms.gripper_anchor = gripper_pose;
    ms.held = GripperTarget{gripper_pose, map_openness(hand.aperture)};
    return ms;
}

GripperTarget map_hand(const MappingState& ms, const HandSample& hand)
{
    if (ms.frozen) {
        return ms.held;
    }
    const Vec3 d = hand.pose.position - ms.hand_anchor.position;
    const Vec3 mapped(ms.mirror_x * d.x(), ms.mirror_y * d.y(), d.z());
    const Quat rel = hand.pose.orientation * ms.hand_anchor.orientation.conjugate();
    GripperTarget t;
    t.pose = Pose(ms.gripper_anchor.position + ms.scale * mapped,
                  ms.rotation_offset * rel * ms.gripper_anchor.orientation);
    t.openness_mm = map_openness(hand.aperture);
    return t;
}

MappingState freeze(const MappingState& ms, const HandSample& current)
{
    if (ms.frozen) return ms;
    MappingState out = ms;
    out.held = map_hand(ms, current);
    out.frozen = true;
    return out;
}

MappingState unfreeze(const MappingState& ms, const HandSample& current_hand, const Pose& current_gripper)
{
    if (!ms.frozen) {
        throw MappingError("unfreeze: mapping is not frozen");
    }
    MappingState out = reanchored(ms, current_hand, current_gripper);
    out.frozen = false;
    return out;
}

MappingState set_scale(const MappingState& ms, double s, const HandSample& current_hand, const Pose& current_gripper)
{
    if (!std::isfinite(s)) {
        throw MappingError("set_scale: scale must be finite");
    }
    MappingState out = ms;
    out.scale = std::clamp(s, kMinScale, kMaxScale);
    return ms.frozen ? out : reanchored(out, current_hand, current_gripper);
}

MirrorAxis parse_mirror_axis(char axis)
{
    switch (axis) {
    case 'x':
    case 'X':
        return MirrorAxis::x;
    case 'y':
    case 'Y':
        return MirrorAxis::y;
    default:
        throw MappingError(std::string("flip_axis: only x and y can be mirrored, got '") + axis + "'");
    }
}

MappingState flip_axis(const MappingState& ms, MirrorAxis axis, const HandSample& current_hand,
                       const Pose& current_gripper)
{
    MappingState out = ms;
    if (axis == MirrorAxis::x) {
        out.mirror_x = -out.mirror_x;
    } else {
        out.mirror_y = -out.mirror_y;
    }
    return ms.frozen ? out : reanchored(out, current_hand, current_gripper);
}

MappingState set_rotation_offset(const MappingState& ms, const Quat& offset, const HandSample& current_hand,
                                 const Pose& current_gripper)
{
    MappingState out = ms;
    out.rotation_offset = canonical(offset);
    return ms.frozen ? out : reanchored(out, current_hand, current_gripper);
}

Quat comfort_rotation_offset()
{
    return axis_angle(Vec3::UnitY(), 20.0 * std::numbers::pi / 180.0);
}

double map_openness(double aperture)
{
    if (!std::isfinite(aperture)) return 0.0;
    return std::clamp(aperture, 0.0, 1.0) * kMaxOpennessMm;
}

} // namespace armteleop
