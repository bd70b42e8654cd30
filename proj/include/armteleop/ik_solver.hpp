#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "armteleop/kinematics.hpp"

namespace armteleop {

class IkConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct IkConfig {
    std::size_t population_size = 120;
    std::size_t generations_per_frame = 3;
    double smoothing_alpha = 0.5;
    double position_tolerance = 0.001;  // m
    double rotation_tolerance = 0.0087; // rad, about 0.5 deg
    double position_weight = 1.0;
    double rotation_weight = 0.115; // position_tolerance / rotation_tolerance
    std::uint64_t rng_seed = 1;
    double mutation_sigma = 0.05; // rad, upper end of the mutation scale
    double elite_fraction = 0.2;
    double init_sigma = 0.3; // rad, upper end of the initial spread around the seed

    /// Throws IkConfigError when an invariant is violated.
    void validate() const;
};

struct IkSolution {
    JointConfig q;
    double position_residual = 0.0;
    double rotation_residual = 0.0;
    bool reachable = false;
    std::size_t generations_used = 0;
    double fitness = 0.0;
};

/// Weighted Euclidean combination of the position and rotation error of
/// FK(q) against target. Zero iff exact hit.
double fitness(const KinematicChain& chain, const JointConfig& q, const Pose& target, const IkConfig& cfg);

/// Population-based IK in the (mu + lambda) style: elites survive unchanged,
/// the rest of the population is refilled every generation by blend
/// crossover of two elites followed by Gaussian mutation.
///
/// The mutation (and initial spread) scale of each child is drawn
/// log-uniformly from [sigma * 1e-4, sigma], so one population probes
/// coarse and fine steps at once. Without that, a fixed 0.05 rad step stalls
/// at centimeter accuracy on a 0.9 m arm.
///
/// An instance owns its RNG: repeated calls continue the random stream, and
/// two instances built with the same config produce identical call sequences.
class EvolutionaryIk {
public:
    EvolutionaryIk(KinematicChain chain, IkConfig cfg);

    IkSolution solve(const Pose& target, const JointConfig& seed);

    const KinematicChain& chain() const { return chain_; }
    const IkConfig& config() const { return cfg_; }

    /// Best fitness after the initial population and after each generation
    /// of the most recent solve call.
    const std::vector<double>& best_fitness_history() const { return history_; }

private:
    struct Individual {
        JointConfig genes;
        double fitness = 0.0;
    };

    double scale_draw(double sigma);
    void evaluate(Individual& ind, const Pose& target) const;

    KinematicChain chain_;
    IkConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::vector<Individual> population_;
    std::vector<double> history_;
    JointConfig lo_, hi_;
};

/// One-shot solve with a fresh solver seeded from cfg.rng_seed.
IkSolution solve(const KinematicChain& chain, const Pose& target, const JointConfig& seed, const IkConfig& cfg);

/// Per-joint alpha * previous + (1 - alpha) * solved.
JointConfig smooth(const JointConfig& previous, const JointConfig& solved, double alpha);

} // namespace armteleop
