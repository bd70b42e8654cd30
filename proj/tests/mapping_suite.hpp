#pragma once

// Randomized algebra checks for the hand-to-gripper mapping. Each case
// builds a mapping, pushes it through a random chain of reconfigurations
// and checks the laws after every step.

#include <algorithm>
#include <cmath>
#include <random>

#include "armteleop/mapping.hpp"

namespace testing {

using namespace armteleop;

struct MappingSuiteResult {
    std::size_t cases = 0;
    std::size_t affine_failures = 0;
    std::size_t clamp_failures = 0;
    std::size_t involution_failures = 0;
    std::size_t frozen_failures = 0;
    double worst_jump = 0.0; // m or rad, at re-anchors
};

inline MappingSuiteResult run_mapping_suite(std::uint64_t seed, std::size_t n_cases)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto rand_quat = [&] {
        return canonical(Quat(u(rng), u(rng), u(rng), u(rng)).normalized());
    };
    auto rand_pose = [&] { return Pose(Vec3(u(rng), u(rng), u(rng) + 1.0), rand_quat()); };
    auto rand_hand = [&] { return HandSample(rand_pose(), 0.5 + 0.6 * u(rng), 0.0); };

    MappingSuiteResult r;
    for (std::size_t c = 0; c < n_cases; ++c) {
        ++r.cases;
        MappingState ms = new_mapping(rand_hand(), rand_pose());
        auto jump = [&](const MappingState& m, const HandSample& h, const Pose& g) {
            const GripperTarget t = map_hand(m, h);
            const PoseError e = pose_error(t.pose, g);
            r.worst_jump = std::max({r.worst_jump, e.position, e.rotation});
        };

        for (int step = 0; step < 4; ++step) {
            const HandSample h = rand_hand();
            const Pose g = rand_pose();
            switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
            case 0: {
                const double s = std::exp(2.0 * u(rng)); // about 0.14 .. 7.4
                ms = set_scale(ms, s, h, g);
                if (ms.scale != std::clamp(s, kMinScale, kMaxScale)) ++r.clamp_failures;
                jump(ms, h, g);
                break;
            }
            case 1:
            case 2: {
                const MirrorAxis axis = u(rng) < 0 ? MirrorAxis::x : MirrorAxis::y;
                const int before = axis == MirrorAxis::x ? ms.mirror_x : ms.mirror_y;
                ms = flip_axis(ms, axis, h, g);
                jump(ms, h, g);
                const HandSample h2 = rand_hand();
                const Pose g2 = rand_pose();
                const MappingState twice = flip_axis(ms, axis, h2, g2);
                const int after = axis == MirrorAxis::x ? twice.mirror_x : twice.mirror_y;
                if (after != before) ++r.involution_failures;
                jump(twice, h2, g2);
                break;
            }
            case 3: {
                ms = set_rotation_offset(ms, rand_quat(), h, g);
                jump(ms, h, g);
                break;
            }
            default: {
                const MappingState frozen = freeze(ms, h);
                const GripperTarget held = map_hand(ms, h);
                for (int k = 0; k < 5; ++k) {
                    const GripperTarget t = map_hand(frozen, rand_hand());
                    if (!(t.pose == held.pose) || t.openness_mm != held.openness_mm) ++r.frozen_failures;
                }
                ms = unfreeze(frozen, h, g);
                jump(ms, h, g);
                break;
            }
            }

            // affine in hand position with linear part scale * diag(mx, my, 1)
            const HandSample a = rand_hand();
            const Vec3 d(u(rng), u(rng), u(rng));
            const HandSample b(Pose(a.pose.position + d, a.pose.orientation), a.aperture, 0.0);
            const Vec3 got = map_hand(ms, b).pose.position - map_hand(ms, a).pose.position;
            const Vec3 want = ms.scale * Vec3(ms.mirror_x * d.x(), ms.mirror_y * d.y(), d.z());
            if ((got - want).norm() > 1e-12) ++r.affine_failures;
        }
    }
    return r;
}

} // namespace testing
