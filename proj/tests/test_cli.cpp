#include <catch2/catch.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "clustopt/clustopt.hpp"

using namespace clustopt;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

// Runs the installed binary (path from CLUSTOPT_BIN, set by CTest).
CliResult run_cli(const std::string& args, const std::string& env = "") {
    const char* bin = std::getenv("CLUSTOPT_BIN");
    REQUIRE(bin != nullptr);
    const std::string command = env + " " + std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Three well-separated blobs written as a single-iteration trajectory file.
void write_blob_trajectories(const fs::path& file) {
    const double centers[3][2] = {{-4.0, -4.0}, {0.0, 4.0}, {4.0, -4.0}};
    SplitMix64 rng(7);
    Trajectory t;
    t.algorithm_id = "blob_source";
    t.problem_id = "blobs";
    t.seed = 0;
    Eigen::MatrixXd pop(150, 2);
    for (int blob = 0; blob < 3; ++blob)
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 2; ++j)
                pop(blob * 50 + i, j) = centers[blob][j] + 0.05 * rng.normal();
    t.populations = {pop};
    t.fitness = {Eigen::VectorXd::Zero(150)};
    write_trajectories({t}, file);
}

void write_desk_config(const fs::path& file, std::uint64_t master_seed = 42) {
    nlohmann::json j;
    j["functions"] = {"sphere", "linear_slope"};
    j["dimensions"] = {2};
    j["instance_seeds"] = {1};
    j["algorithms"] = {"de_rand_1_bin", "de_best_1_bin", "woa", "aeo"};
    j["run_seeds"] = {0, 1, 2};
    j["population_size"] = 20;
    j["iterations"] = 10;
    j["k_min"] = 2;
    j["k_max"] = 8;
    j["master_seed"] = master_seed;
    std::ofstream(file) << j.dump(2);
}

}  // namespace

TEST_CASE("run executes an experiment and writes a complete manifest", "[cli]") {
    TempDir dir("clustopt_cli_run");
    write_desk_config(dir.path / "exp.json");
    const auto out = dir.path / "out";
    const auto result = run_cli("run --config " + (dir.path / "exp.json").string() +
                                " --out " + out.string() + " --jobs 2");
    INFO(result.output);
    REQUIRE(result.exit_code == 0);
    REQUIRE(fs::exists(out / "manifest.json"));
    nlohmann::json manifest;
    std::ifstream(out / "manifest.json") >> manifest;
    for (const auto& pj : manifest.at("problems"))
        for (const auto& file : pj.at("files"))
            REQUIRE(fs::exists(out / file.get<std::string>()));
    for (const auto& file : manifest.at("global_files"))
        REQUIRE(fs::exists(out / file.get<std::string>()));
    REQUIRE(result.output.find("manifest:") != std::string::npos);
}

TEST_CASE("CLUSTOPT_SEED overrides the config master seed", "[cli]") {
    TempDir dir("clustopt_cli_seed");
    write_desk_config(dir.path / "exp.json");
    const auto out_a = dir.path / "a";
    const auto out_b = dir.path / "b";
    const auto base = run_cli("run --config " + (dir.path / "exp.json").string() +
                              " --out " + out_a.string());
    REQUIRE(base.exit_code == 0);
    const auto overridden =
        run_cli("run --config " + (dir.path / "exp.json").string() + " --out " +
                    out_b.string(),
                "CLUSTOPT_SEED=777");
    REQUIRE(overridden.exit_code == 0);
    nlohmann::json ma, mb;
    std::ifstream(out_a / "manifest.json") >> ma;
    std::ifstream(out_b / "manifest.json") >> mb;
    REQUIRE(ma.at("master_seed") == 42);
    REQUIRE(mb.at("master_seed") == 777);
    REQUIRE(ma.at("artifact_hash") != mb.at("artifact_hash"));
}

TEST_CASE("cluster fits the requested number of centroids", "[cli]") {
    TempDir dir("clustopt_cli_cluster");
    write_blob_trajectories(dir.path / "blobs.csv");
    const auto model_path = dir.path / "model.json";
    const auto result = run_cli("cluster --trajectories " +
                                (dir.path / "blobs.csv").string() +
                                " --k 3 --seed 5 --out " + model_path.string());
    INFO(result.output);
    REQUIRE(result.exit_code == 0);
    const auto model = ClusterModel::load(model_path);
    REQUIRE(model.cluster_count() == 3);

    // auto selects the elbow, which is also 3 on this fixture
    const auto auto_result =
        run_cli("cluster --trajectories " + (dir.path / "blobs.csv").string() +
                " --k auto --k-max 8 --seed 5 --out " + model_path.string());
    REQUIRE(auto_result.exit_code == 0);
    REQUIRE(ClusterModel::load(model_path).cluster_count() == 3);
}

TEST_CASE("represent, stability, similarity and plot chain together", "[cli]") {
    TempDir dir("clustopt_cli_chain");
    // two algorithms x three seeds on one tiny problem
    const auto inst = make_instance(FunctionId::Sphere, 2, 1);
    std::vector<Trajectory> trajectories;
    for (const auto id : {AlgorithmId::DeRand1Bin, AlgorithmId::Woa})
        for (std::uint64_t r = 0; r < 3; ++r) {
            AlgorithmConfig cfg;
            cfg.algorithm_id = id;
            cfg.population_size = 10;
            cfg.iterations = 6;
            trajectories.push_back(run(cfg, inst, r).trajectory);
        }
    write_trajectories(trajectories, dir.path / "traj.csv");

    REQUIRE(run_cli("cluster --trajectories " + (dir.path / "traj.csv").string() +
                    " --k auto --k-max 8 --seed 3 --out " +
                    (dir.path / "model.json").string())
                .exit_code == 0);
    REQUIRE(run_cli("represent --trajectories " + (dir.path / "traj.csv").string() +
                    " --model " + (dir.path / "model.json").string() + " --out " +
                    (dir.path / "reps.csv").string())
                .exit_code == 0);
    REQUIRE(fs::exists(dir.path / "reps.csv.meta.json"));

    REQUIRE(run_cli("stability --reps " + (dir.path / "reps.csv").string() +
                    " --out " + (dir.path / "stab.csv").string())
                .exit_code == 0);
    const auto stab = read_labeled_matrix_csv(dir.path / "stab.csv");
    REQUIRE(stab.col_labels.size() == 2);
    REQUIRE(stab.row_labels.size() == 1);

    REQUIRE(run_cli("similarity --reps " + (dir.path / "reps.csv").string() +
                    " --out " + (dir.path / "sim.csv").string())
                .exit_code == 0);
    const auto sim = read_labeled_matrix_csv(dir.path / "sim.csv");
    REQUIRE(sim.col_labels == sim.row_labels);
    REQUIRE(sim.values(0, 0) == Approx(1.0));

    // heatmap via the sidecar-discovered model, selected down to one run
    REQUIRE(run_cli("plot heatmap --in " + (dir.path / "reps.csv").string() +
                    " --algorithm de_rand_1_bin --seed 0 --out " +
                    (dir.path / "heat.svg").string())
                .exit_code == 0);
    REQUIRE(fs::exists(dir.path / "heat.svg"));
    // ambiguous selection is a usage error
    REQUIRE(run_cli("plot heatmap --in " + (dir.path / "reps.csv").string() +
                    " --out " + (dir.path / "heat2.svg").string())
                .exit_code == 1);

    REQUIRE(run_cli("plot clustermap --in " + (dir.path / "sim.csv").string() +
                    " --out " + (dir.path / "cmap.svg").string())
                .exit_code == 0);
    REQUIRE(run_cli("plot stability --in " + (dir.path / "stab.csv").string() +
                    " --out " + (dir.path / "stab.svg").string())
                .exit_code == 0);
}

TEST_CASE("ingest validates trajectory files", "[cli]") {
    TempDir dir("clustopt_cli_ingest");
    write_blob_trajectories(dir.path / "good.csv");
    const auto good = run_cli("ingest --in " + (dir.path / "good.csv").string() +
                              " --validate");
    REQUIRE(good.exit_code == 0);
    REQUIRE(good.output.find("OK") != std::string::npos);

    {
        std::ofstream out(dir.path / "bad.csv");
        out << "algorithm,problem,seed,iteration,slot,fitness,x0,x1\n";
        out << "a,p,1,0,0,1.0,0.5,0.5\n";
        out << "a,p,1,0,1,1.0,0.5\n";  // missing coordinate
    }
    const auto bad = run_cli("ingest --in " + (dir.path / "bad.csv").string() +
                             " --validate");
    REQUIRE(bad.exit_code == 2);
    REQUIRE(bad.output.find("line 3") != std::string::npos);
}

TEST_CASE("usage errors exit 1, data errors exit 2", "[cli]") {
    TempDir dir("clustopt_cli_errors");
    REQUIRE(run_cli("frobnicate").exit_code == 1);
    REQUIRE(run_cli("run --config /nonexistent.json --out " +
                    (dir.path / "out").string())
                .exit_code == 2);
    write_blob_trajectories(dir.path / "blobs.csv");
    REQUIRE(run_cli("cluster --trajectories " + (dir.path / "blobs.csv").string() +
                    " --k nonsense --seed 1 --out " +
                    (dir.path / "m.json").string())
                .exit_code == 1);
    REQUIRE(run_cli("--help").exit_code == 0);
}
