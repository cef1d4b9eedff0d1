#ifndef CLUSTOPT_ALGORITHMS_HPP
#define CLUSTOPT_ALGORITHMS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "clustopt/common.hpp"
#include "clustopt/problems.hpp"
#include "clustopt/rng.hpp"
#include "clustopt/trajectory.hpp"

namespace clustopt {

enum class AlgorithmId { DeRand1Bin, DeBest1Bin, Woa, Aeo };

inline std::string to_string(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::DeRand1Bin: return "de_rand_1_bin";
        case AlgorithmId::DeBest1Bin: return "de_best_1_bin";
        case AlgorithmId::Woa: return "woa";
        case AlgorithmId::Aeo: return "aeo";
    }
    throw UsageError("unknown algorithm id");
}

inline AlgorithmId algorithm_from_string(const std::string& name) {
    if (name == "de_rand_1_bin") return AlgorithmId::DeRand1Bin;
    if (name == "de_best_1_bin") return AlgorithmId::DeBest1Bin;
    if (name == "woa") return AlgorithmId::Woa;
    if (name == "aeo") return AlgorithmId::Aeo;
    throw UsageError("unknown algorithm: '" + name + "'");
}

struct AlgorithmConfig {
    AlgorithmId algorithm_id = AlgorithmId::DeRand1Bin;
    int population_size = 50;
    int iterations = 0;  // 0 = use 10 * dimension
    std::map<std::string, double> parameters;  // DE: F = 0.8, CR = 0.9

    double param(const std::string& key, double fallback) const {
        auto it = parameters.find(key);
        return it == parameters.end() ? fallback : it->second;
    }

    void validate() const {
        if (population_size < 4)
            throw UsageError("population_size must be >= 4 (DE needs 3 donors "
                             "plus the target)");
        if (iterations < 0) throw UsageError("iterations must be >= 1 (or 0 for 10d)");
    }
};

// Minimization target with box bounds.  Decouples the optimizers from the
// built-in benchmark functions so external objectives can be driven too.
struct Objective {
    std::string problem_id;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::function<double(const Eigen::VectorXd&)> fn;

    int dimension() const { return static_cast<int>(lower.size()); }
};

inline Objective as_objective(const ProblemInstance& inst) {
    Objective obj;
    obj.problem_id = inst.id();
    obj.lower = inst.lower;
    obj.upper = inst.upper;
    obj.fn = [inst](const Eigen::VectorXd& x) { return evaluate(inst, x); };
    return obj;
}

struct RunRecord {
    std::string algorithm_id;
    std::string problem_id;
    std::uint64_t seed = 0;
    std::int64_t evaluations = 0;
    Trajectory trajectory;
};

// Shared evaluation context for the step functions: counts evaluations and
// aborts the run on a non-finite objective value.
struct StepContext {
    const Objective& objective;
    SplitMix64& rng;
    int step_index = 0;   // 0-based update step (iteration i+1 of the trajectory)
    int total_steps = 1;  // b - 1
    std::int64_t evaluations = 0;

    double eval(const Eigen::VectorXd& x) {
        const double f = objective.fn(x);
        ++evaluations;
        if (!std::isfinite(f))
            throw DataError("objective '" + objective.problem_id +
                            "' returned a non-finite value at update step " +
                            std::to_string(step_index));
        return f;
    }
};

namespace detail {

inline Eigen::VectorXd clamp_to_bounds(const Eigen::VectorXd& x,
                                       const Objective& obj) {
    return x.cwiseMax(obj.lower).cwiseMin(obj.upper);
}

inline int argmin(const Eigen::VectorXd& v) {
    int idx = 0;
    v.minCoeff(&idx);
    return idx;
}

// Indices sorted worst-to-best by fitness; stable so ties keep slot order.
inline std::vector<int> rank_worst_first(const Eigen::VectorXd& fit) {
    std::vector<int> order(static_cast<std::size_t>(fit.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fit(a) > fit(b); });
    return order;
}

}  // namespace detail

// Uniform population in the box.  Depends only on the seed (not on the
// algorithm), so runs sharing a seed start from the same population.
inline Eigen::MatrixXd init_population(const Objective& obj, std::uint64_t seed,
                                       int population_size) {
    if (population_size < 1) throw UsageError("population size must be >= 1");
    SplitMix64 rng(derive_seed(seed, "clustopt.init"));
    const int d = obj.dimension();
    Eigen::MatrixXd pop(population_size, d);
    for (int i = 0; i < population_size; ++i)
        for (int j = 0; j < d; ++j)
            pop(i, j) = rng.uniform(obj.lower(j), obj.upper(j));
    return pop;
}

inline Eigen::MatrixXd init_population(const ProblemInstance& inst,
                                       std::uint64_t seed, int population_size) {
    return init_population(as_objective(inst), seed, population_size);
}

// DE/rand/1/bin and DE/best/1/bin.  Binomial crossover without a forced
// index, matching the reference implementation this reproduces; greedy
// selection keeps the child when it is not worse.
inline void step_de(StepContext& ctx, const AlgorithmConfig& cfg,
                    Eigen::MatrixXd& pop, Eigen::VectorXd& fit) {
    const int s = static_cast<int>(pop.rows());
    const int d = static_cast<int>(pop.cols());
    const double f_weight = cfg.param("F", 0.8);
    const double cr = cfg.param("CR", 0.9);
    const bool best_variant = cfg.algorithm_id == AlgorithmId::DeBest1Bin;
    const int best = detail::argmin(fit);

    Eigen::MatrixXd next = pop;
    Eigen::VectorXd next_fit = fit;
    for (int i = 0; i < s; ++i) {
        int r1, r2, r3;
        do {
            r1 = static_cast<int>(ctx.rng.below(static_cast<std::uint64_t>(s)));
        } while (r1 == i);
        do {
            r2 = static_cast<int>(ctx.rng.below(static_cast<std::uint64_t>(s)));
        } while (r2 == i || r2 == r1);
        do {
            r3 = static_cast<int>(ctx.rng.below(static_cast<std::uint64_t>(s)));
        } while (r3 == i || r3 == r1 || r3 == r2);
        const int base = best_variant ? best : r1;

        Eigen::VectorXd trial = pop.row(i);
        for (int j = 0; j < d; ++j) {
            const double coin = ctx.rng.uniform();
            if (coin < cr)
                trial(j) = pop(base, j) + f_weight * (pop(r2, j) - pop(r3, j));
        }
        trial = detail::clamp_to_bounds(trial, ctx.objective);
        const double f = ctx.eval(trial);
        if (f <= fit(i)) {
            next.row(i) = trial;
            next_fit(i) = f;
        }
    }
    pop = std::move(next);
    fit = std::move(next_fit);
}

namespace detail {

// Spiral move of the whale at distance |best - x| from the leader:
// x' = |best - x| * e^l * cos(2 pi l) + best  (spiral constant b = 1).
inline Eigen::VectorXd woa_spiral_move(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& best, double l) {
    const Eigen::VectorXd dist = (best - x).cwiseAbs();
    return dist * std::exp(l) * std::cos(2.0 * std::numbers::pi * l) + best;
}

}  // namespace detail

// Whale Optimization Algorithm: encircling / random-search / spiral phases,
// with the coefficient a decreasing linearly from 2 to 0 over the run.
// Positions are replaced unconditionally, as in the original algorithm.
inline void step_woa(StepContext& ctx, Eigen::MatrixXd& pop,
                     Eigen::VectorXd& fit) {
    const int s = static_cast<int>(pop.rows());
    const double progress =
        ctx.total_steps <= 1
            ? 0.0
            : static_cast<double>(ctx.step_index) / (ctx.total_steps - 1);
    const double a = 2.0 * (1.0 - progress);
    const Eigen::VectorXd leader = pop.row(detail::argmin(fit));

    Eigen::MatrixXd next(pop.rows(), pop.cols());
    Eigen::VectorXd next_fit(s);
    for (int i = 0; i < s; ++i) {
        const double r = ctx.rng.uniform();
        const double amp = 2.0 * a * r - a;  // A in [-a, a]
        const double c = 2.0 * r;
        const double p = ctx.rng.uniform();
        const double l = ctx.rng.uniform(-1.0, 1.0);

        Eigen::VectorXd candidate;
        if (p < 0.5) {
            if (std::abs(amp) < 1.0) {
                const Eigen::VectorXd dist = (c * leader - pop.row(i).transpose()).cwiseAbs();
                candidate = leader - amp * dist;
            } else {
                const int idx =
                    static_cast<int>(ctx.rng.below(static_cast<std::uint64_t>(s)));
                const Eigen::VectorXd rand_whale = pop.row(idx);
                const Eigen::VectorXd dist =
                    (c * rand_whale - pop.row(i).transpose()).cwiseAbs();
                candidate = rand_whale - amp * dist;
            }
        } else {
            candidate = detail::woa_spiral_move(pop.row(i), leader, l);
        }
        candidate = detail::clamp_to_bounds(candidate, ctx.objective);
        next.row(i) = candidate;
        next_fit(i) = ctx.eval(candidate);
    }
    pop = std::move(next);
    fit = std::move(next_fit);
}

// Artificial Ecosystem-based Optimization.  The original algorithm evaluates
// two sweeps per epoch (production+consumption, then decomposition); to keep
// the budget at exactly s evaluations per recorded iteration, update steps
// alternate between the two sweeps.
inline void step_aeo(StepContext& ctx, Eigen::MatrixXd& pop,
                     Eigen::VectorXd& fit) {
    const int s = static_cast<int>(pop.rows());
    const Objective& obj = ctx.objective;

    Eigen::MatrixXd cand(pop.rows(), pop.cols());
    if (ctx.step_index % 2 == 0) {
        // Production + consumption sweep.
        const std::vector<int> order = detail::rank_worst_first(fit);
        const Eigen::VectorXd best = pop.row(order[static_cast<std::size_t>(s - 1)]);
        const double shrink =
            1.0 - static_cast<double>(ctx.step_index) / std::max(1, ctx.total_steps);
        const double a = shrink * ctx.rng.uniform();
        Eigen::VectorXd x_rand(pop.cols());
        for (int j = 0; j < pop.cols(); ++j)
            x_rand(j) = ctx.rng.uniform(obj.lower(j), obj.upper(j));
        const Eigen::VectorXd producer = (1.0 - a) * best + a * x_rand;
        cand.row(order[0]) = producer;

        for (int rank = 1; rank < s; ++rank) {
            const int i = order[static_cast<std::size_t>(rank)];
            const Eigen::VectorXd xi = pop.row(i);
            double v2;
            do {
                v2 = ctx.rng.normal();
            } while (std::abs(v2) < 1e-12);
            const double consume = 0.5 * ctx.rng.normal() / std::abs(v2);
            const double role = ctx.rng.uniform();

            Eigen::VectorXd prey;  // a worse-ranked consumer, or the producer
            if (rank >= 2) {
                const int prey_rank = 1 + static_cast<int>(ctx.rng.below(
                                              static_cast<std::uint64_t>(rank - 1)));
                prey = pop.row(order[static_cast<std::size_t>(prey_rank)]);
            } else {
                prey = producer;
            }

            if (role < 1.0 / 3.0) {
                cand.row(i) = xi + consume * (xi - producer);  // herbivore
            } else if (role < 2.0 / 3.0) {
                cand.row(i) = xi + consume * (xi - prey);  // carnivore
            } else {
                const double r2 = ctx.rng.uniform();
                cand.row(i) = xi + consume * (r2 * (xi - producer) +
                                              (1.0 - r2) * (xi - prey));  // omnivore
            }
        }
    } else {
        // Decomposition sweep around the current best.
        const Eigen::VectorXd best = pop.row(detail::argmin(fit));
        for (int i = 0; i < s; ++i) {
            const double dec = 3.0 * ctx.rng.normal();
            const double r3 = ctx.rng.uniform();
            const double e = r3 * static_cast<double>(ctx.rng.below(2) + 1) - 1.0;
            const double h = 2.0 * r3 - 1.0;
            cand.row(i) =
                best + dec * (e * best - h * pop.row(i).transpose());
        }
    }

    for (int i = 0; i < s; ++i) {
        const Eigen::VectorXd x =
            detail::clamp_to_bounds(cand.row(i), ctx.objective);
        const double f = ctx.eval(x);
        if (f < fit(i)) {
            pop.row(i) = x;
            fit(i) = f;
        }
    }
}

inline RunRecord run(const AlgorithmConfig& cfg, const Objective& obj,
                     std::uint64_t seed) {
    cfg.validate();
    const int d = obj.dimension();
    const int s = cfg.population_size;
    const int b = cfg.iterations > 0 ? cfg.iterations : 10 * d;
    if (b < 1) throw UsageError("iteration budget must be >= 1");

    RunRecord record;
    record.algorithm_id = to_string(cfg.algorithm_id);
    record.problem_id = obj.problem_id;
    record.seed = seed;
    record.trajectory.algorithm_id = record.algorithm_id;
    record.trajectory.problem_id = obj.problem_id;
    record.trajectory.seed = seed;
    record.trajectory.populations.reserve(static_cast<std::size_t>(b));
    record.trajectory.fitness.reserve(static_cast<std::size_t>(b));

    SplitMix64 step_rng(
        derive_seed(seed, "clustopt.step." + record.algorithm_id));
    StepContext ctx{obj, step_rng};
    ctx.total_steps = b - 1;

    Eigen::MatrixXd pop = init_population(obj, seed, s);
    Eigen::VectorXd fit(s);
    for (int i = 0; i < s; ++i) fit(i) = ctx.eval(pop.row(i));
    record.trajectory.populations.push_back(pop);
    record.trajectory.fitness.push_back(fit);

    for (int step = 0; step < b - 1; ++step) {
        ctx.step_index = step;
        switch (cfg.algorithm_id) {
            case AlgorithmId::DeRand1Bin:
            case AlgorithmId::DeBest1Bin:
                step_de(ctx, cfg, pop, fit);
                break;
            case AlgorithmId::Woa:
                step_woa(ctx, pop, fit);
                break;
            case AlgorithmId::Aeo:
                step_aeo(ctx, pop, fit);
                break;
        }
        record.trajectory.populations.push_back(pop);
        record.trajectory.fitness.push_back(fit);
    }
    record.evaluations = ctx.evaluations;
    return record;
}

inline RunRecord run(const AlgorithmConfig& cfg, const ProblemInstance& inst,
                     std::uint64_t seed) {
    return run(cfg, as_objective(inst), seed);
}

}  // namespace clustopt

#endif
