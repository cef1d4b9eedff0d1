#include <catch2/catch.hpp>

#include <filesystem>
#include <set>

#include "clustopt/clustering.hpp"
#include "clustopt/rng.hpp"

#include "kmeans_oracle.hpp"

using namespace clustopt;

namespace {

Eigen::MatrixXd three_blobs(std::uint64_t seed, int per_blob = 50,
                            double sigma = 0.02) {
    const double centers[3][2] = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
    SplitMix64 rng(seed);
    Eigen::MatrixXd points(3 * per_blob, 2);
    for (int blob = 0; blob < 3; ++blob)
        for (int i = 0; i < per_blob; ++i)
            for (int j = 0; j < 2; ++j)
                points(blob * per_blob + i, j) =
                    centers[blob][j] + sigma * rng.normal();
    return points;
}

}  // namespace

TEST_CASE("scaler maps extremes to 0 and 1", "[clustering]") {
    Eigen::MatrixXd points(2, 2);
    points << -5.0, -5.0, 5.0, 5.0;
    const auto scaler = fit_scaler(points);
    const auto scaled = scaler.transform(points);
    REQUIRE(scaled(0, 0) == 0.0);
    REQUIRE(scaled(0, 1) == 0.0);
    REQUIRE(scaled(1, 0) == 1.0);
    REQUIRE(scaled(1, 1) == 1.0);
}

TEST_CASE("constant dimensions scale to 0.5", "[clustering]") {
    Eigen::MatrixXd points(3, 2);
    points << 3.0, 1.0, 3.0, 2.0, 3.0, 4.0;
    const auto scaler = fit_scaler(points);
    const auto scaled = scaler.transform(points);
    for (int i = 0; i < 3; ++i) REQUIRE(scaled(i, 0) == 0.5);
}

TEST_CASE("scaler hand example {0,2,4} -> {0,0.5,1}", "[clustering]") {
    Eigen::MatrixXd points(3, 1);
    points << 0.0, 2.0, 4.0;
    const auto scaled = fit_scaler(points).transform(points);
    REQUIRE(scaled(0, 0) == 0.0);
    REQUIRE(scaled(1, 0) == 0.5);
    REQUIRE(scaled(2, 0) == 1.0);
}

TEST_CASE("scaler inverse undoes transform", "[clustering]") {
    SplitMix64 rng(3);
    Eigen::MatrixXd points(20, 3);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 3; ++j) points(i, j) = rng.uniform(-5.0, 5.0);
    const auto scaler = fit_scaler(points);
    const auto scaled = scaler.transform(points);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd back = scaler.inverse(scaled.row(i));
        REQUIRE((back - points.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    REQUIRE_THROWS_AS(fit_scaler(Eigen::MatrixXd(0, 2)), UsageError);
}

TEST_CASE("kmeans with k == N distinct points fits perfectly", "[clustering]") {
    Eigen::MatrixXd points(4, 2);
    points << 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0;
    const auto result = kmeans_fit(points, 4, 7);
    REQUIRE(result.inertia == 0.0);
    std::set<int> used(result.assignments.begin(), result.assignments.end());
    REQUIRE(used.size() == 4);
}

TEST_CASE("kmeans matches the brute-force optimum on the 1d fixture",
          "[clustering]") {
    Eigen::MatrixXd points(4, 1);
    points << 0.0, 0.1, 0.9, 1.0;
    const double oracle = clustopt_tests::brute_force_inertia(points, 2);
    REQUIRE(oracle == Approx(0.01));  // {0,0.1} and {0.9,1.0}

    const auto result = kmeans_fit(points, 2, 11);
    REQUIRE(result.inertia == Approx(oracle).margin(1e-9));
    std::vector<double> centroids{result.centroids(0, 0), result.centroids(1, 0)};
    std::sort(centroids.begin(), centroids.end());
    REQUIRE(centroids[0] == Approx(0.05));
    REQUIRE(centroids[1] == Approx(0.95));
    REQUIRE(result.assignments[0] == result.assignments[1]);
    REQUIRE(result.assignments[2] == result.assignments[3]);
    REQUIRE(result.assignments[0] != result.assignments[2]);
}

TEST_CASE("kmeans++ reaches the brute-force optimum on most small instances",
          "[clustering]") {
    SplitMix64 rng(23);
    int hits = 0;
    const int trials = 40;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(5));   // 4..8
        const int d = 1 + static_cast<int>(rng.below(3));   // 1..3
        const int k = 2 + static_cast<int>(rng.below(2));   // 2..3
        Eigen::MatrixXd points(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) points(i, j) = rng.uniform(0.0, 1.0);
        const auto result = kmeans_fit(points, k, rng.next_u64());
        // Lloyd is monotone in every trial
        for (std::size_t step = 1; step < result.inertia_trace.size(); ++step)
            REQUIRE(result.inertia_trace[step] <=
                    result.inertia_trace[step - 1] + 1e-12);
        if (result.inertia <= clustopt_tests::brute_force_inertia(points, k) + 1e-9) ++hits;
    }
    REQUIRE(hits >= trials * 9 / 10);
}

TEST_CASE("kmeans is deterministic per seed and validates k", "[clustering]") {
    const auto points = three_blobs(1, 10);
    const auto a = kmeans_fit(points, 3, 42);
    const auto b = kmeans_fit(points, 3, 42);
    REQUIRE(a.centroids == b.centroids);
    REQUIRE(a.assignments == b.assignments);
    REQUIRE_THROWS_AS(kmeans_fit(points, 31, 1), UsageError);
    REQUIRE_THROWS_AS(kmeans_fit(points, 0, 1), UsageError);
}

TEST_CASE("kmeans handles duplicate points without dividing by zero",
          "[clustering]") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Constant(6, 2, 0.25);
    const auto result = kmeans_fit(points, 2, 9);
    REQUIRE(result.inertia == 0.0);
    REQUIRE(result.centroids.allFinite());
}

TEST_CASE("elbow picks 3 on three well-separated blobs", "[clustering]") {
    const auto points = three_blobs(101);
    const auto sel = select_k_elbow(points, 2, 10, 5);
    REQUIRE(sel.k == 3);
    REQUIRE(sel.trace.size() == 9);
    // trace inertia non-increasing in k (best of 3 restarts)
    for (std::size_t i = 1; i < sel.trace.size(); ++i)
        REQUIRE(sel.trace[i].second <= sel.trace[i - 1].second + 1e-9);
}

TEST_CASE("a single blob keeps the knee near k_min", "[clustering]") {
    // 1d blob: quantization error falls off ~1/k^2, so the knee hugs k_min
    SplitMix64 rng(77);
    Eigen::MatrixXd points(120, 1);
    for (int i = 0; i < 120; ++i) points(i, 0) = 0.5 + 0.05 * rng.normal();
    const auto sel = select_k_elbow(points, 2, 6, 3);
    REQUIRE(sel.k <= 3);
}

TEST_CASE("perfectly linear inertia decay returns k_min", "[clustering]") {
    std::vector<std::pair<int, double>> trace;
    for (int k = 2; k <= 10; ++k) trace.emplace_back(k, 100.0 - 10.0 * k);
    REQUIRE(detail::knee_of_trace(trace) == 2);
    // constant inertia: degenerate chord, same answer
    std::vector<std::pair<int, double>> flat;
    for (int k = 2; k <= 10; ++k) flat.emplace_back(k, 5.0);
    REQUIRE(detail::knee_of_trace(flat) == 2);
}

TEST_CASE("narrow k ranges return k_min with a warning", "[clustering]") {
    const auto points = three_blobs(5, 10);
    const auto sel = select_k_elbow(points, 2, 3, 1);
    REQUIRE(sel.k == 2);
    REQUIRE_THROWS_AS(select_k_elbow(points, 1, 5, 1), UsageError);
    REQUIRE_THROWS_AS(select_k_elbow(points, 5, 4, 1), UsageError);
    REQUIRE_THROWS_AS(select_k_elbow(points, 2, 1000, 1), UsageError);
}

TEST_CASE("assign breaks ties toward the lowest cluster index", "[clustering]") {
    ClusterModel model;
    model.scaler.min = Eigen::VectorXd::Zero(1);
    model.scaler.max = Eigen::VectorXd::Ones(1);
    model.centroids.resize(4, 1);
    model.centroids << 0.2, 0.9, 0.9, 0.4;  // 0 and 3 equidistant from 0.3
    Eigen::MatrixXd probe(2, 1);
    probe << 0.3, 0.9;
    const auto idx = assign(model, probe);
    REQUIRE(idx[0] == 0);  // tie between clusters 0 and 3
    REQUIRE(idx[1] == 1);  // tie between clusters 1 and 2

    // exact centroid match assigns to that cluster
    Eigen::MatrixXd at_centroid(1, 1);
    at_centroid << 0.4;
    REQUIRE(assign(model, at_centroid)[0] == 3);

    REQUIRE_THROWS_AS(assign(model, Eigen::MatrixXd(1, 2)), UsageError);
}

TEST_CASE("assigning the training set reproduces the training assignments",
          "[clustering]") {
    const auto raw = three_blobs(13, 20);
    ClusterModel model;
    model.scaler = fit_scaler(raw);
    const auto scaled = model.scaler.transform(raw);
    const auto fit = kmeans_fit(scaled, 3, 21);
    model.centroids = fit.centroids;
    REQUIRE(assign(model, raw) == fit.assignments);
}

TEST_CASE("cluster model JSON round-trips", "[clustering]") {
    const auto raw = three_blobs(29, 15);
    const auto model = fit_cluster_model(raw, 0, 2, 8, 3);
    const auto path = std::filesystem::temp_directory_path() /
                      "clustopt_model_roundtrip.json";
    model.save(path);
    const auto loaded = ClusterModel::load(path);
    std::filesystem::remove(path);
    REQUIRE(loaded.scaler.min == model.scaler.min);
    REQUIRE(loaded.scaler.max == model.scaler.max);
    REQUIRE(loaded.centroids == model.centroids);
    REQUIRE(loaded.k_selection_trace == model.k_selection_trace);
    REQUIRE(loaded.fingerprint() == model.fingerprint());
}

TEST_CASE("model fingerprints distinguish different models", "[clustering]") {
    const auto a = fit_cluster_model(three_blobs(1, 15), 3, 2, 8, 3);
    const auto b = fit_cluster_model(three_blobs(2, 15), 3, 2, 8, 3);
    REQUIRE(a.fingerprint() != b.fingerprint());
}
