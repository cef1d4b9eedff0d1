#include <catch2/catch.hpp>

#include "clustopt/algorithms.hpp"
#include "clustopt/problems.hpp"

using namespace clustopt;

namespace {

AlgorithmConfig make_config(AlgorithmId id, int s = 50, int b = 0) {
    AlgorithmConfig cfg;
    cfg.algorithm_id = id;
    cfg.population_size = s;
    cfg.iterations = b;
    return cfg;
}

const AlgorithmId kAllAlgorithms[] = {AlgorithmId::DeRand1Bin,
                                      AlgorithmId::DeBest1Bin, AlgorithmId::Woa,
                                      AlgorithmId::Aeo};

bool within_bounds(const Eigen::MatrixXd& pop, const ProblemInstance& inst) {
    for (int i = 0; i < pop.rows(); ++i)
        for (int j = 0; j < pop.cols(); ++j)
            if (pop(i, j) < inst.lower(j) || pop(i, j) > inst.upper(j))
                return false;
    return true;
}

}  // namespace

TEST_CASE("init_population is deterministic and in bounds", "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 3, 1);
    const auto a = init_population(inst, 3, 20);
    const auto b = init_population(inst, 3, 20);
    REQUIRE(a == b);
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        REQUIRE(within_bounds(init_population(inst, seed, 10), inst));
}

TEST_CASE("same seed gives every algorithm the same initial population",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Rastrigin, 2, 1);
    const auto reference = run(make_config(AlgorithmId::DeRand1Bin, 10, 3), inst, 42)
                               .trajectory.populations[0];
    for (const auto id : kAllAlgorithms) {
        const auto record = run(make_config(id, 10, 3), inst, 42);
        REQUIRE(record.trajectory.populations[0] == reference);
    }
    REQUIRE(reference == init_population(inst, 42, 10));
}

TEST_CASE("run produces the configured trajectory shape", "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    const auto record = run(make_config(AlgorithmId::DeRand1Bin, 50, 20), inst, 7);
    REQUIRE(record.trajectory.iterations() == 20);
    REQUIRE(record.trajectory.population_size() == 50);
    REQUIRE(record.trajectory.dimension() == 2);
    // default budget is 10d iterations
    const auto def = run(make_config(AlgorithmId::Woa, 10, 0), inst, 7);
    REQUIRE(def.trajectory.iterations() == 20);
}

TEST_CASE("a one-iteration budget records only the initial population",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    for (const auto id : kAllAlgorithms) {
        const auto record = run(make_config(id, 4, 1), inst, 11);
        REQUIRE(record.trajectory.iterations() == 1);
        REQUIRE(record.trajectory.populations[0] == init_population(inst, 11, 4));
        REQUIRE(record.evaluations == 4);
    }
}

TEST_CASE("runs are bit-identical for the same (algorithm, instance, seed)",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Rastrigin, 2, 2);
    for (const auto id : kAllAlgorithms) {
        const auto a = run(make_config(id, 8, 12), inst, 5);
        const auto b = run(make_config(id, 8, 12), inst, 5);
        REQUIRE(a.trajectory.iterations() == b.trajectory.iterations());
        for (int it = 0; it < a.trajectory.iterations(); ++it) {
            REQUIRE(a.trajectory.populations[it] == b.trajectory.populations[it]);
            REQUIRE(a.trajectory.fitness[it] == b.trajectory.fitness[it]);
        }
    }
}

TEST_CASE("evaluation budget is exactly s*b", "[algorithms]") {
    const auto inst = make_instance(FunctionId::Weierstrass, 2, 1);
    for (const auto id : kAllAlgorithms) {
        const auto record = run(make_config(id, 10, 15), inst, 3);
        REQUIRE(record.evaluations == 10 * 15);
    }
}

TEST_CASE("all recorded solutions satisfy the bounds", "[algorithms]") {
    const auto inst = make_instance(FunctionId::Rastrigin, 3, 4);
    for (const auto id : kAllAlgorithms) {
        const auto record = run(make_config(id, 12, 20), inst, 9);
        for (const auto& pop : record.trajectory.populations)
            REQUIRE(within_bounds(pop, inst));
    }
}

TEST_CASE("DE with F=0 and CR=0 leaves the population unchanged",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    auto cfg = make_config(AlgorithmId::DeRand1Bin, 10, 5);
    cfg.parameters["F"] = 0.0;
    cfg.parameters["CR"] = 0.0;
    const auto record = run(cfg, inst, 21);
    for (int it = 1; it < record.trajectory.iterations(); ++it)
        REQUIRE(record.trajectory.populations[it] ==
                record.trajectory.populations[0]);
}

TEST_CASE("DE best-so-far fitness is non-increasing across 100 seeds",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    const auto cfg = make_config(AlgorithmId::DeRand1Bin, 10, 15);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto record = run(cfg, inst, seed);
        double best = record.trajectory.fitness[0].minCoeff();
        for (int it = 1; it < record.trajectory.iterations(); ++it) {
            const double current = record.trajectory.fitness[it].minCoeff();
            REQUIRE(current <= best + 1e-15);
            best = std::min(best, current);
        }
    }
}

TEST_CASE("DE selection is elitist per slot", "[algorithms]") {
    const auto inst = make_instance(FunctionId::Rastrigin, 2, 3);
    for (const auto id : {AlgorithmId::DeRand1Bin, AlgorithmId::DeBest1Bin}) {
        const auto record = run(make_config(id, 8, 20), inst, 13);
        for (int it = 1; it < record.trajectory.iterations(); ++it)
            for (int slot = 0; slot < 8; ++slot)
                REQUIRE(record.trajectory.fitness[it](slot) <=
                        record.trajectory.fitness[it - 1](slot) + 1e-15);
    }
}

TEST_CASE("WOA spiral move lands on the leader at distance zero",
          "[algorithms]") {
    const Eigen::VectorXd best = Eigen::Vector2d(1.5, -2.0);
    for (const double l : {-1.0, -0.3, 0.0, 0.7, 1.0})
        REQUIRE(detail::woa_spiral_move(best, best, l) == best);
    // at l = 0 the offset is exactly the per-dimension distance
    const Eigen::VectorXd whale = Eigen::Vector2d(0.5, -1.0);
    const Eigen::VectorXd moved = detail::woa_spiral_move(whale, best, 0.0);
    REQUIRE(moved(0) == Approx(std::abs(best(0) - whale(0)) + best(0)));
    REQUIRE(moved(1) == Approx(std::abs(best(1) - whale(1)) + best(1)));
}

TEST_CASE("degenerate populations step without division by zero",
          "[algorithms]") {
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    const auto obj = as_objective(inst);
    for (const auto id : kAllAlgorithms) {
        Eigen::MatrixXd pop = Eigen::MatrixXd::Constant(6, 2, 1.25);
        Eigen::VectorXd fit(6);
        for (int i = 0; i < 6; ++i) fit(i) = obj.fn(pop.row(i));
        SplitMix64 rng(77);
        StepContext ctx{obj, rng};
        ctx.total_steps = 4;
        const auto cfg = make_config(id, 6, 5);
        for (int step = 0; step < 4; ++step) {
            ctx.step_index = step;
            switch (id) {
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
            REQUIRE(pop.allFinite());
            REQUIRE(fit.allFinite());
        }
    }
}

TEST_CASE("a non-finite objective aborts the run with a diagnostic",
          "[algorithms]") {
    Objective obj;
    obj.problem_id = "poisoned";
    obj.lower = Eigen::VectorXd::Constant(2, -1.0);
    obj.upper = Eigen::VectorXd::Constant(2, 1.0);
    int calls = 0;
    obj.fn = [&calls](const Eigen::VectorXd&) {
        return ++calls > 10 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    };
    REQUIRE_THROWS_MATCHES(run(make_config(AlgorithmId::Woa, 5, 10), obj, 1),
                           DataError,
                           Catch::Matchers::Message("objective 'poisoned' "
                                                    "returned a non-finite value "
                                                    "at update step 1"));
}

TEST_CASE("config validation", "[algorithms]") {
    auto cfg = make_config(AlgorithmId::DeRand1Bin, 3, 5);
    REQUIRE_THROWS_AS(cfg.validate(), UsageError);
    REQUIRE_THROWS_AS(algorithm_from_string("cma_es"), UsageError);
    for (const auto id : kAllAlgorithms)
        REQUIRE(algorithm_from_string(to_string(id)) == id);
}
