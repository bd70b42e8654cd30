#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "armteleop/kinematics.hpp"
#include "support.hpp"

using namespace armteleop;

namespace {

// Homogeneous-matrix product, written independently of forward_kinematics.
Eigen::Isometry3d fk_matrix(const KinematicChain& chain, const JointConfig& q)
{
    auto iso = [](const Pose& p) {
        Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
        t.translate(p.position);
        t.rotate(p.orientation.toRotationMatrix());
        return t;
    };
    Eigen::Isometry3d t = iso(chain.base_frame());
    for (std::size_t i = 0; i < chain.dof(); ++i) {
        const JointSpec& j = chain.joint(i);
        t = t * iso(Pose(j.origin_translation, j.origin_rotation));
        t.rotate(Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], j.axis).toRotationMatrix());
    }
    return t * iso(chain.tool_offset());
}

} // namespace

TEST_CASE("planar chain matches the two-link closed form")
{
    const KinematicChain chain = planar_test_chain();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 500; ++i) {
        JointConfig q(2);
        q << u(rng), u(rng);
        const Pose p = forward_kinematics(chain, q);
        const double x = 0.5 * std::cos(q[0]) + 0.3865 * std::cos(q[0] + q[1]);
        const double y = 0.5 * std::sin(q[0]) + 0.3865 * std::sin(q[0] + q[1]);
        CHECK(p.position.x() == doctest::Approx(x).epsilon(1e-12));
        CHECK(p.position.y() == doctest::Approx(y).epsilon(1e-12));
        CHECK(std::abs(p.position.z()) < 1e-12);
        CHECK(std::abs(std::remainder(yaw_of(p.orientation) - (q[0] + q[1]), 2 * std::numbers::pi)) < 1e-9);
    }
}

TEST_CASE("reference chain home pose and reach")
{
    const KinematicChain chain = reference_chain();
    const Pose home = forward_kinematics(chain, JointConfig::Zero(6));
    // 0.12 + 0.35 up, 0.30 out, 0.05 + 0.0365 + 0.03 down
    CHECK((home.position - Vec3(0.30, 0.0, 0.3535)).norm() < 1e-12);
    CHECK((home.orientation * Vec3::UnitZ() - Vec3(0, 0, -1)).norm() < 1e-12);
    CHECK(chain.reach_radius() == doctest::Approx(0.8865));
    CHECK(chain.geometric_reach_bound() == doctest::Approx(0.8865));
}

TEST_CASE("reference chain matches an independent matrix product")
{
    const KinematicChain chain = reference_chain();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 300; ++i) {
        JointConfig q(6);
        for (int j = 0; j < 6; ++j) q[j] = u(rng);
        const Pose p = forward_kinematics(chain, q);
        const Eigen::Isometry3d t = fk_matrix(chain, q);
        CHECK((p.position - t.translation()).norm() < 1e-12);
        CHECK((p.orientation.toRotationMatrix() - t.rotation()).norm() < 1e-12);
        CHECK(p.position.norm() <= chain.reach_radius() + 1e-12);
        const auto frames = joint_frames(chain, q);
        REQUIRE(frames.size() == 7);
        CHECK((frames.back().position - p.position).norm() < 1e-12);
        CHECK(pose_error(frames.back(), p).rotation < 1e-9);
    }
}

TEST_CASE("reach_check is the closed reach sphere")
{
    const KinematicChain chain = reference_chain();
    CHECK(reach_check(chain, Vec3(0.8865, 0, 0)));
    CHECK_FALSE(reach_check(chain, Vec3(0.8866, 0, 0)));
    CHECK(reach_check(chain, Vec3::Zero()));
}

TEST_CASE("dimension and limit helpers")
{
    const KinematicChain chain = reference_chain();
    CHECK_THROWS_AS(forward_kinematics(chain, JointConfig::Zero(5)), DimensionError);
    JointConfig q = JointConfig::Constant(6, 4.0);
    CHECK_FALSE(within_limits(chain, q));
    const JointConfig c = clamp_to_limits(chain, q);
    CHECK(within_limits(chain, c));
    CHECK(c[0] == doctest::Approx(175.0 * std::numbers::pi / 180.0));
}

TEST_CASE("chain documents round-trip and are validated")
{
    const KinematicChain chain = reference_chain();
    const KinematicChain back = load_chain(chain_to_json(chain));
    REQUIRE(back.dof() == 6);
    JointConfig q(6);
    q << 0.1, -0.2, 0.3, -0.4, 0.5, -0.6;
    CHECK(forward_kinematics(back, q) == forward_kinematics(chain, q));

    const KinematicChain file = load_chain_file(testing::data_path("chains/reference_6dof.json"));
    CHECK(forward_kinematics(file, q) == forward_kinematics(chain, q));

    CHECK_THROWS_AS(load_chain("{"), ChainParseError);
    CHECK_THROWS_AS(load_chain(R"({"joints": []})"), ChainParseError);

    std::string doc = chain_to_json(planar_test_chain());
    const std::string bad_limits = std::string(doc).replace(doc.find("-3.14159"), 8, "4.0");
    CHECK_THROWS_AS(load_chain(bad_limits), ChainValidationError);

    JointSpec zero_axis;
    zero_axis.axis = Vec3::Zero();
    CHECK_THROWS_AS(KinematicChain({zero_axis}, Pose(), Pose(), 1.0), ChainValidationError);
    CHECK_THROWS_AS(KinematicChain({}, Pose(), Pose(), 1.0), ChainValidationError);
    JointSpec slow;
    slow.max_velocity = 0.0;
    CHECK_THROWS_AS(KinematicChain({slow}, Pose(), Pose(), 1.0), ChainValidationError);
}

TEST_CASE("pose error uses the short rotation")
{
    const Pose a(Vec3(1, 2, 3), Quat::Identity());
    const Pose b(Vec3(1, 2, 4), axis_angle(Vec3::UnitX(), 0.3));
    const PoseError e = pose_error(a, b);
    CHECK(e.position == doctest::Approx(1.0));
    CHECK(e.rotation == doctest::Approx(0.3));
    const Pose c(Vec3::Zero(), Quat(-b.orientation.coeffs()));
    CHECK(pose_error(b, c).rotation < 1e-12);
}
