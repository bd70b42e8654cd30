#include "armteleop/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace armteleop {

namespace {

double percentile(std::vector<double> v, double p)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

} // namespace

BenchReport bench_ik(const KinematicChain& chain, const IkConfig& cfg, const BenchOptions& opt)
{
    if (opt.n_targets < 1) throw std::invalid_argument("bench_ik: n_targets must be >= 1");
    using clock = std::chrono::steady_clock;

    IkConfig solver_cfg = cfg;
    solver_cfg.rng_seed = opt.seed;
    EvolutionaryIk ik(chain, solver_cfg);
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const JointConfig lo = chain.lower_limits();
    const JointConfig hi = chain.upper_limits();
    const auto n = static_cast<Eigen::Index>(chain.dof());

    auto random_q = [&] {
        JointConfig q(n);
        for (Eigen::Index k = 0; k < n; ++k) q[k] = lo[k] + unit(rng) * (hi[k] - lo[k]);
        return q;
    };

    std::vector<double> times_ms;
    auto timed_solve = [&](const Pose& target, const JointConfig& seed) {
        const auto t0 = clock::now();
        IkSolution s = ik.solve(target, seed);
        times_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
        return s;
    };

    BenchReport rep;
    rep.n_targets = opt.n_targets;
    std::vector<double> frames_needed;
    for (std::size_t i = 0; i < opt.n_targets; ++i) {
        const JointConfig truth = random_q();
        const Pose target = forward_kinematics(chain, truth);
        JointConfig seed(n);
        for (Eigen::Index k = 0; k < n; ++k) seed[k] = truth[k] + opt.seed_noise * normal(rng);
        seed = clamp_to_limits(chain, seed);
        for (std::size_t f = 1; f <= opt.max_frames; ++f) {
            const IkSolution s = timed_solve(target, seed);
            seed = s.q;
            if (s.reachable) {
                ++rep.converged;
                frames_needed.push_back(static_cast<double>(f));
                break;
            }
        }
    }

    // Beyond reach_radius + position_tolerance no configuration can come
    // within tolerance, so every one of these must be flagged.
    const double r_min = chain.reach_radius() + cfg.position_tolerance + 1e-6;
    for (std::size_t i = 0; i < opt.n_targets; ++i) {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        dir.normalize();
        const double r = r_min + unit(rng) * (1.5 - r_min);
        const Quat q(normal(rng), normal(rng), normal(rng), normal(rng));
        const Pose target(chain.base_frame().position + r * dir, q);
        const IkSolution s = timed_solve(target, random_q());
        ++rep.unreachable_targets;
        if (!s.reachable) ++rep.unreachable_flagged;
    }

    rep.pass_rate = static_cast<double>(rep.converged) / static_cast<double>(rep.n_targets);
    rep.median_frames = percentile(frames_needed, 0.5);
    rep.solve_calls = times_ms.size();
    rep.median_ms = percentile(times_ms, 0.5);
    rep.p99_ms = percentile(times_ms, 0.99);
    rep.max_ms = times_ms.empty() ? 0.0 : *std::max_element(times_ms.begin(), times_ms.end());
    rep.within_budget = rep.p99_ms <= opt.frame_budget_ms;
    return rep;
}

} // namespace armteleop
