#pragma once

#include <cstdint>

#include "armteleop/ik_solver.hpp"

namespace armteleop {

struct BenchOptions {
    std::size_t n_targets = 1000;
    std::uint64_t seed = 1;
    std::size_t max_frames = 60;  // warm-started solve calls per target
    double seed_noise = 0.05;     // rad, initial seed offset from the true angles
    double frame_budget_ms = 1000.0 / 35.0;
};

struct BenchReport {
    std::size_t n_targets = 0;
    std::size_t converged = 0;
    double pass_rate = 0.0;
    double median_frames = 0.0; // over converged targets
    std::size_t solve_calls = 0;
    double median_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
    bool within_budget = false; // p99_ms <= frame_budget_ms
    std::size_t unreachable_targets = 0;
    std::size_t unreachable_flagged = 0;
};

/// Round trip: FK of random in-limit angles gives a target, the solver
/// starts near the true angles and is re-seeded with its own best for up to
/// max_frames calls. Also solves as many targets placed beyond the reach
/// sphere and counts how many come back flagged unreachable.
BenchReport bench_ik(const KinematicChain& chain, const IkConfig& cfg, const BenchOptions& opt);

} // namespace armteleop
