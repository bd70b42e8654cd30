#pragma once

#include <stdexcept>

#include "armteleop/pose.hpp"

namespace armteleop {

inline constexpr double kMaxOpennessMm = 145.0;
inline constexpr double kMinScale = 0.5;
inline constexpr double kMaxScale = 2.0;

/// Invalid mapping transition or argument (unfreeze while active, z flip, NaN scale).
class MappingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct HandSample {
    Pose pose;            // wrist, world frame
    double aperture = 0.0; // 0 fist .. 1 fully open
    double timestamp = 0.0;

    HandSample() = default;
    HandSample(Pose p, double a, double t);
};

struct GripperTarget {
    Pose pose;
    double openness_mm = 0.0;
};

enum class MirrorAxis { x, y };

/// Hand-to-gripper correspondence. Value type; every operation returns a new state.
struct MappingState {
    bool frozen = false;
    Pose hand_anchor;
    Pose gripper_anchor; // stored with the rotation offset factored out
    double scale = 1.0;
    int mirror_x = 1;
    int mirror_y = 1;
    Quat rotation_offset = Quat::Identity();
    GripperTarget held; // output while frozen

    bool operator==(const MappingState& o) const;
};

MappingState new_mapping(const HandSample& hand, const Pose& gripper_pose);

GripperTarget map_hand(const MappingState& ms, const HandSample& hand);

/// Pauses the mapping, holding the target produced by `current` (pose and openness).
/// Freezing a frozen mapping returns it unchanged.
MappingState freeze(const MappingState& ms, const HandSample& current);

/// Resumes with anchors moved to the current hand and gripper poses.
/// Throws MappingError if the mapping is not frozen.
MappingState unfreeze(const MappingState& ms, const HandSample& current_hand, const Pose& current_gripper);

/// Clamps s into [0.5, 2] and re-anchors. Throws MappingError on non-finite s.
MappingState set_scale(const MappingState& ms, double s, const HandSample& current_hand, const Pose& current_gripper);

MappingState flip_axis(const MappingState& ms, MirrorAxis axis, const HandSample& current_hand,
                       const Pose& current_gripper);

/// Character form used by the wire protocol; anything but 'x'/'y' throws MappingError.
MirrorAxis parse_mirror_axis(char axis);

MappingState set_rotation_offset(const MappingState& ms, const Quat& offset, const HandSample& current_hand,
                                 const Pose& current_gripper);

/// Comfort preset: 20 degrees of wrist pitch (about the world y axis).
Quat comfort_rotation_offset();

/// clamp(aperture, 0, 1) * 145 mm
double map_openness(double aperture);

} // namespace armteleop
