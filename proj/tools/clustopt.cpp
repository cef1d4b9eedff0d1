// clustopt: cluster-based representations of optimizer search trajectories.
//
// Subcommand per pipeline stage so externally produced trajectories can be
// analyzed without the built-in algorithms: run, cluster, represent,
// stability, similarity, plot, ingest.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clustopt/clustopt.hpp"

namespace fs = std::filesystem;
using namespace clustopt;

namespace {

std::vector<Trajectory> read_trajectory_files(const std::vector<std::string>& files) {
    std::vector<Trajectory> all;
    for (const auto& file : files) {
        auto read = read_trajectories(file);
        for (auto& t : read) {
            t.validate();
            all.push_back(std::move(t));
        }
    }
    return all;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"ClustOpt: clustering-based search-trajectory representations"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "run a full experiment from a config file");
    std::string run_config, run_out;
    int run_jobs = 1;
    run_cmd->add_option("--config", run_config, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", run_out, "output directory")->required();
    run_cmd->add_option("--jobs", run_jobs, "problems processed in parallel");

    // --- cluster -----------------------------------------------------------
    auto* cluster_cmd =
        app.add_subcommand("cluster", "fit a cluster model on merged trajectories");
    std::vector<std::string> cluster_files;
    std::string cluster_k = "auto", cluster_out;
    std::uint64_t cluster_seed = 0;
    int cluster_kmin = 2, cluster_kmax = 25;
    cluster_cmd->add_option("--trajectories", cluster_files, "trajectory CSV files")
        ->required()
        ->expected(-1);
    cluster_cmd->add_option("--k", cluster_k, "cluster count, or 'auto' for the elbow method");
    cluster_cmd->add_option("--k-min", cluster_kmin, "elbow scan lower bound");
    cluster_cmd->add_option("--k-max", cluster_kmax, "elbow scan upper bound");
    cluster_cmd->add_option("--seed", cluster_seed, "clustering seed");
    cluster_cmd->add_option("--out", cluster_out, "model JSON output")->required();

    // --- represent ---------------------------------------------------------
    auto* represent_cmd =
        app.add_subcommand("represent", "build per-iteration cluster-count representations");
    std::string represent_file, represent_model, represent_out;
    represent_cmd->add_option("--trajectories", represent_file, "trajectory CSV")->required();
    represent_cmd->add_option("--model", represent_model, "cluster model JSON")->required();
    represent_cmd->add_option("--out", represent_out, "representation CSV output")->required();

    // --- stability ---------------------------------------------------------
    auto* stability_cmd =
        app.add_subcommand("stability", "per-(algorithm, problem) stability scores");
    std::string stability_reps, stability_out;
    stability_cmd->add_option("--reps", stability_reps, "representation CSV")->required();
    stability_cmd->add_option("--out", stability_out, "stability CSV output")->required();

    // --- similarity --------------------------------------------------------
    auto* similarity_cmd =
        app.add_subcommand("similarity", "pairwise algorithm similarity matrix");
    std::string similarity_reps, similarity_out;
    bool similarity_allow_incomplete = false;
    similarity_cmd->add_option("--reps", similarity_reps, "representation CSV")->required();
    similarity_cmd->add_option("--out", similarity_out, "similarity CSV output")->required();
    similarity_cmd->add_flag("--allow-incomplete", similarity_allow_incomplete,
                             "skip missing (problem, seed) cells instead of failing");

    // --- plot --------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand("plot", "render SVG figures");
    plot_cmd->require_subcommand(1);
    auto* heatmap_cmd = plot_cmd->add_subcommand("heatmap", "trajectory heatmap");
    std::string heat_in, heat_model, heat_out, heat_alg, heat_problem;
    std::optional<std::uint64_t> heat_seed;
    heatmap_cmd->add_option("--in", heat_in, "representation CSV")->required();
    heatmap_cmd->add_option("--model", heat_model,
                            "cluster model JSON (default: from the CSV sidecar)");
    heatmap_cmd->add_option("--algorithm", heat_alg, "select by algorithm id");
    heatmap_cmd->add_option("--problem", heat_problem, "select by problem id");
    heatmap_cmd->add_option("--seed", heat_seed, "select by seed");
    heatmap_cmd->add_option("--out", heat_out, "SVG output")->required();

    auto* clustermap_cmd = plot_cmd->add_subcommand("clustermap", "similarity clustermap");
    std::string cmap_in, cmap_out;
    clustermap_cmd->add_option("--in", cmap_in, "similarity CSV")->required();
    clustermap_cmd->add_option("--out", cmap_out, "SVG output")->required();

    auto* stabplot_cmd = plot_cmd->add_subcommand("stability", "stability table heatmap");
    std::string splot_in, splot_out;
    stabplot_cmd->add_option("--in", splot_in, "stability CSV")->required();
    stabplot_cmd->add_option("--out", splot_out, "SVG output")->required();

    // --- ingest ------------------------------------------------------------
    auto* ingest_cmd =
        app.add_subcommand("ingest", "validate externally produced trajectories");
    std::string ingest_in, ingest_out;
    bool ingest_validate = false;
    ingest_cmd->add_option("--in", ingest_in, "trajectory CSV")->required();
    ingest_cmd->add_flag("--validate", ingest_validate, "check the format and exit");
    ingest_cmd->add_option("--out", ingest_out, "rewrite in canonical row order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 1;
    }

    if (*run_cmd) {
        auto config = ExperimentConfig::load(run_config);
        if (const char* env = std::getenv("CLUSTOPT_SEED")) {
            char* end = nullptr;
            const auto v = std::strtoull(env, &end, 10);
            if (end == env || *end != '\0')
                throw UsageError("CLUSTOPT_SEED is not an integer: '" +
                                 std::string(env) + "'");
            config.master_seed = v;
        }
        const auto result = run_experiment(config, run_out, run_jobs);
        for (const auto& p : result.problems)
            std::cout << "problem " << p.problem_id << ": k=" << p.chosen_k << ", "
                      << p.files.size() << " files\n";
        for (const auto& [stage, ms] : result.timings_ms)
            std::cout << "stage " << stage << ": " << static_cast<long>(ms) << " ms\n";
        std::cout << "manifest: " << result.manifest_path.string() << '\n';
        return 0;
    }

    if (*cluster_cmd) {
        int k = 0;
        if (cluster_k != "auto") {
            try {
                k = std::stoi(cluster_k);
            } catch (const std::exception&) {
                throw UsageError("--k must be 'auto' or a positive integer");
            }
            if (k < 1) throw UsageError("--k must be >= 1");
        }
        const auto trajectories = read_trajectory_files(cluster_files);
        if (trajectories.empty()) throw DataError("no trajectories in input");
        const auto merged = merge(trajectories);
        const auto model = fit_cluster_model(merged.points, k, cluster_kmin,
                                             cluster_kmax, cluster_seed);
        model.save(cluster_out);
        std::cout << "model: " << model.cluster_count() << " clusters over "
                  << merged.points.rows() << " solutions -> " << cluster_out << '\n';
        return 0;
    }

    if (*represent_cmd) {
        const auto trajectories = read_trajectory_files({represent_file});
        if (trajectories.empty()) throw DataError("no trajectories in input");
        const auto model = ClusterModel::load(represent_model);
        std::vector<TrajectoryRepresentation> reps;
        for (const auto& t : trajectories)
            reps.push_back(build_representation(t, model));
        write_representations(reps, represent_out, represent_model);
        std::cout << reps.size() << " representations -> " << represent_out << '\n';
        return 0;
    }

    if (*stability_cmd) {
        const auto file = read_representations(stability_reps);
        if (file.representations.empty())
            throw DataError("no representations in input");
        const auto table = stability_table(file.representations);
        dump_plot_csv(table, stability_out);
        std::cout << table.row_labels.size() << " problems x "
                  << table.col_labels.size() << " algorithms -> " << stability_out
                  << '\n';
        return 0;
    }

    if (*similarity_cmd) {
        const auto file = read_representations(similarity_reps);
        if (file.representations.empty())
            throw DataError("no representations in input");
        const auto sim =
            similarity_matrix(file.representations, !similarity_allow_incomplete);
        LabeledMatrix table;
        table.corner = "algorithm";
        table.row_labels = sim.algorithms;
        table.col_labels = sim.algorithms;
        table.values = sim.values;
        dump_plot_csv(table, similarity_out);
        std::cout << sim.algorithms.size() << " algorithms -> " << similarity_out
                  << '\n';
        return 0;
    }

    if (*heatmap_cmd) {
        const auto file = read_representations(heat_in);
        std::vector<const TrajectoryRepresentation*> matches;
        for (const auto& r : file.representations) {
            if (!heat_alg.empty() && r.algorithm_id != heat_alg) continue;
            if (!heat_problem.empty() && r.problem_id != heat_problem) continue;
            if (heat_seed && r.seed != *heat_seed) continue;
            matches.push_back(&r);
        }
        if (matches.empty()) throw UsageError("no representation matches the selection");
        if (matches.size() > 1)
            throw UsageError("selection matches " + std::to_string(matches.size()) +
                             " representations; narrow with --algorithm/--problem/--seed");
        std::string model_path = heat_model;
        if (model_path.empty()) {
            if (file.model_file.empty())
                throw UsageError("no --model given and no sidecar next to " + heat_in);
            model_path = (fs::path(heat_in).parent_path() / file.model_file).string();
        }
        const auto model = ClusterModel::load(model_path);
        render_trajectory_heatmap(*matches.front(), model, heat_out);
        std::cout << "heatmap -> " << heat_out << '\n';
        return 0;
    }

    if (*clustermap_cmd) {
        const auto table = read_labeled_matrix_csv(cmap_in);
        if (table.row_labels != table.col_labels)
            throw DataError("similarity CSV is not a square labelled matrix");
        SimilarityMatrix sim;
        sim.algorithms = table.col_labels;
        sim.values = table.values;
        sim.leaf_order = average_linkage_order(sim.values);
        render_similarity_clustermap(sim, cmap_out);
        std::cout << "clustermap -> " << cmap_out << '\n';
        return 0;
    }

    if (*stabplot_cmd) {
        const auto table = read_labeled_matrix_csv(splot_in);
        render_matrix_heatmap(table, "algorithm stability per problem", splot_out);
        std::cout << "stability heatmap -> " << splot_out << '\n';
        return 0;
    }

    if (*ingest_cmd) {
        auto trajectories = read_trajectories(ingest_in);
        for (const auto& t : trajectories) t.validate();
        std::cout << ingest_in << ": " << trajectories.size() << " trajectories";
        if (!trajectories.empty())
            std::cout << " (b=" << trajectories[0].iterations()
                      << ", s=" << trajectories[0].population_size()
                      << ", d=" << trajectories[0].dimension() << ")";
        std::cout << " OK\n";
        if (!ingest_out.empty()) write_trajectories(trajectories, ingest_out);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
