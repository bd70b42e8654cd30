#include "armteleop/ik_solver.hpp"

#include <algorithm>
#include <cmath>

namespace armteleop {

void IkConfig::validate() const
{
    if (population_size < 2) throw IkConfigError("population_size must be >= 2");
    if (generations_per_frame < 1) throw IkConfigError("generations_per_frame must be >= 1");
    if (!(smoothing_alpha >= 0.0 && smoothing_alpha <= 1.0)) throw IkConfigError("smoothing_alpha must be in [0,1]");
    if (!(position_tolerance > 0.0) || !(rotation_tolerance > 0.0)) throw IkConfigError("tolerances must be positive");
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0)) throw IkConfigError("elite_fraction must be in (0,1)");
    if (!(position_weight >= 0.0) || !(rotation_weight >= 0.0) || position_weight + rotation_weight <= 0.0) {
        throw IkConfigError("fitness weights must be non-negative and not both zero");
    }
    if (!(mutation_sigma > 0.0) || !(init_sigma > 0.0)) throw IkConfigError("sigmas must be positive");
}

double fitness(const KinematicChain& chain, const JointConfig& q, const Pose& target, const IkConfig& cfg)
{
    const PoseError e = pose_error(forward_kinematics(chain, q), target);
    // Euclidean rather than summed: a sum of the two norms has a ridge along
    // position_error == 0 that random steps almost never follow.
    return std::hypot(cfg.position_weight * e.position, cfg.rotation_weight * e.rotation);
}

EvolutionaryIk::EvolutionaryIk(KinematicChain chain, IkConfig cfg)
    : chain_(std::move(chain)), cfg_(cfg), rng_(cfg.rng_seed), lo_(chain_.lower_limits()), hi_(chain_.upper_limits())
{
    cfg_.validate();
    population_.resize(cfg_.population_size);
}

double EvolutionaryIk::scale_draw(double sigma)
{
    // log-uniform over four decades below sigma
    return sigma * std::pow(10.0, -4.0 * unit_(rng_));
}

void EvolutionaryIk::evaluate(Individual& ind, const Pose& target) const
{
    ind.fitness = fitness(chain_, ind.genes, target, cfg_);
}

IkSolution EvolutionaryIk::solve(const Pose& target, const JointConfig& seed)
{
    check_dimension(chain_, seed);
    const auto n = static_cast<Eigen::Index>(chain_.dof());
    const std::size_t pop = cfg_.population_size;
    const std::size_t elites = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(cfg_.elite_fraction * static_cast<double>(pop))), 1, pop - 1);

    history_.clear();

    auto clamp = [&](JointConfig& g) { g = g.cwiseMax(lo_).cwiseMin(hi_); };

    population_[0].genes = seed;
    clamp(population_[0].genes);
    evaluate(population_[0], target);
    for (std::size_t i = 1; i < pop; ++i) {
        auto& g = population_[i].genes;
        g.resize(n);
        const double s = scale_draw(cfg_.init_sigma);
        for (Eigen::Index k = 0; k < n; ++k) g[k] = population_[0].genes[k] + s * normal_(rng_);
        clamp(g);
        evaluate(population_[i], target);
    }

    auto by_fitness = [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; };
    std::stable_sort(population_.begin(), population_.end(), by_fitness);
    history_.push_back(population_[0].fitness);

    std::uniform_int_distribution<std::size_t> pick(0, elites - 1);
    for (std::size_t gen = 0; gen < cfg_.generations_per_frame; ++gen) {
        for (std::size_t i = elites; i < pop; ++i) {
            const auto& a = population_[pick(rng_)].genes;
            const auto& b = population_[pick(rng_)].genes;
            auto& child = population_[i].genes;
            const double s = scale_draw(cfg_.mutation_sigma);
            // half the children mutate only a couple of genes
            const double gene_rate = unit_(rng_) < 0.5 ? 1.0 : 2.0 / static_cast<double>(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                // BLX-0.5 blend, then mutation
                const double u = -0.5 + 2.0 * unit_(rng_);
                const double step = s * normal_(rng_);
                child[k] = a[k] + u * (b[k] - a[k]) + (unit_(rng_) < gene_rate ? step : 0.0);
            }
            clamp(child);
            evaluate(population_[i], target);
        }
        std::stable_sort(population_.begin(), population_.end(), by_fitness);
        history_.push_back(population_[0].fitness);
    }

    const Individual& best = population_[0];
    const PoseError e = pose_error(forward_kinematics(chain_, best.genes), target);
    IkSolution sol;
    sol.q = best.genes;
    sol.position_residual = e.position;
    sol.rotation_residual = e.rotation;
    sol.reachable = e.position <= cfg_.position_tolerance && e.rotation <= cfg_.rotation_tolerance;
    sol.generations_used = cfg_.generations_per_frame;
    sol.fitness = best.fitness;
    return sol;
}

IkSolution solve(const KinematicChain& chain, const Pose& target, const JointConfig& seed, const IkConfig& cfg)
{
    EvolutionaryIk solver(chain, cfg);
    return solver.solve(target, seed);
}

JointConfig smooth(const JointConfig& previous, const JointConfig& solved, double alpha)
{
    if (previous.size() != solved.size()) {
        throw DimensionError("smooth: joint vectors differ in length");
    }
    return alpha * previous + (1.0 - alpha) * solved;
}

} // namespace armteleop
