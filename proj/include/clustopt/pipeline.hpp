#ifndef CLUSTOPT_PIPELINE_HPP
#define CLUSTOPT_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clustopt/algorithms.hpp"
#include "clustopt/clustering.hpp"
#include "clustopt/common.hpp"
#include "clustopt/metrics.hpp"
#include "clustopt/problems.hpp"
#include "clustopt/representation.hpp"
#include "clustopt/trajectory.hpp"
#include "clustopt/viz.hpp"

namespace clustopt {

struct ProblemSpec {
    FunctionId function = FunctionId::Sphere;
    int dimension = 2;
    std::vector<std::uint64_t> instance_seeds;
};

struct ExperimentConfig {
    std::vector<ProblemSpec> problems;
    std::vector<AlgorithmConfig> algorithms;
    std::vector<std::uint64_t> run_seeds;
    int population_size = 50;
    int iterations = 0;  // 0 = 10 * dimension per problem
    int k_min = 2;
    int k_max = 25;
    std::uint64_t master_seed = 0;
    bool allow_incomplete_grid = false;
    std::vector<std::string> ingest_files;
    std::string output_dir;  // optional; the CLI's --out takes precedence

    void validate() const {
        if (problems.empty() && ingest_files.empty())
            throw UsageError("config: no problems and no ingest files");
        for (const auto& p : problems) {
            if (p.dimension < 1) throw UsageError("config: dimension must be >= 1");
            if (p.instance_seeds.empty())
                throw UsageError("config: problem without instance seeds");
        }
        if (algorithms.empty() && ingest_files.empty())
            throw UsageError("config: no algorithms");
        if (run_seeds.empty() && ingest_files.empty())
            throw UsageError("config: no run seeds");
        if (k_min < 2 || k_max < k_min)
            throw UsageError("config: need 2 <= k_min <= k_max");
        for (const auto& a : algorithms) a.validate();
        std::set<std::uint64_t> unique_seeds(run_seeds.begin(), run_seeds.end());
        if (unique_seeds.size() != run_seeds.size())
            throw UsageError("config: duplicate run seeds");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        auto problems_json = nlohmann::json::array();
        for (const auto& p : problems) {
            nlohmann::json pj;
            pj["function"] = to_string(p.function);
            pj["dimension"] = p.dimension;
            pj["instance_seeds"] = p.instance_seeds;
            problems_json.push_back(std::move(pj));
        }
        j["problems"] = std::move(problems_json);
        auto algorithms_json = nlohmann::json::array();
        for (const auto& a : algorithms) {
            nlohmann::json aj;
            aj["id"] = to_string(a.algorithm_id);
            aj["parameters"] = a.parameters;
            algorithms_json.push_back(std::move(aj));
        }
        j["algorithms"] = std::move(algorithms_json);
        j["run_seeds"] = run_seeds;
        j["population_size"] = population_size;
        j["iterations"] = iterations;
        j["k_min"] = k_min;
        j["k_max"] = k_max;
        j["master_seed"] = master_seed;
        j["allow_incomplete_grid"] = allow_incomplete_grid;
        j["ingest"] = ingest_files;
        return j;
    }

    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        static const std::set<std::string> known = {
            "functions",       "dimensions", "instance_seeds", "problems",
            "algorithms",      "run_seeds",  "population_size", "iterations",
            "k_min",           "k_max",      "master_seed",     "allow_incomplete_grid",
            "ingest",          "output_dir"};
        for (const auto& [key, value] : j.items())
            if (!known.count(key))
                throw UsageError("config: unknown key '" + key + "'");
        try {
            ExperimentConfig cfg;
            // Shorthand: functions x dimensions, sharing instance_seeds.
            if (j.contains("functions")) {
                const auto seeds =
                    j.value("instance_seeds", std::vector<std::uint64_t>{1});
                const auto dims = j.value("dimensions", std::vector<int>{2});
                for (const auto& fn : j.at("functions")) {
                    for (int dim : dims) {
                        ProblemSpec p;
                        p.function = function_from_string(fn.get<std::string>());
                        p.dimension = dim;
                        p.instance_seeds = seeds;
                        cfg.problems.push_back(std::move(p));
                    }
                }
            }
            if (j.contains("problems")) {
                for (const auto& pj : j.at("problems")) {
                    ProblemSpec p;
                    p.function =
                        function_from_string(pj.at("function").get<std::string>());
                    p.dimension = pj.at("dimension").get<int>();
                    p.instance_seeds =
                        pj.value("instance_seeds", std::vector<std::uint64_t>{1});
                    cfg.problems.push_back(std::move(p));
                }
            }
            if (j.contains("algorithms")) {
                for (const auto& aj : j.at("algorithms")) {
                    AlgorithmConfig a;
                    if (aj.is_string()) {
                        a.algorithm_id = algorithm_from_string(aj.get<std::string>());
                    } else {
                        a.algorithm_id =
                            algorithm_from_string(aj.at("id").get<std::string>());
                        if (aj.contains("parameters"))
                            a.parameters =
                                aj.at("parameters")
                                    .get<std::map<std::string, double>>();
                    }
                    cfg.algorithms.push_back(std::move(a));
                }
            }
            cfg.run_seeds = j.value("run_seeds", std::vector<std::uint64_t>{});
            cfg.population_size = j.value("population_size", 50);
            cfg.iterations = j.value("iterations", 0);
            cfg.k_min = j.value("k_min", 2);
            cfg.k_max = j.value("k_max", 25);
            cfg.master_seed = j.value("master_seed", std::uint64_t{0});
            cfg.allow_incomplete_grid = j.value("allow_incomplete_grid", false);
            cfg.ingest_files = j.value("ingest", std::vector<std::string>{});
            cfg.output_dir = j.value("output_dir", "");
            for (auto& a : cfg.algorithms) {
                a.population_size = cfg.population_size;
                a.iterations = cfg.iterations;
            }
            return cfg;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(std::string("config: ") + e.what());
        }
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

struct ProblemOutput {
    std::string problem_id;
    int dimension = 0;
    int chosen_k = 0;
    std::vector<std::string> files;  // relative to the output directory
    std::vector<TrajectoryRepresentation> representations;
};

struct ExperimentResult {
    std::string config_hash;
    std::filesystem::path output_dir;
    std::vector<ProblemOutput> problems;
    std::map<int, SimilarityMatrix> similarity_by_dimension;
    std::map<int, LabeledMatrix> stability_by_instance;   // keyed by dimension
    std::map<int, LabeledMatrix> stability_by_class;      // keyed by dimension
    std::vector<std::string> global_files;
    std::map<std::string, double> timings_ms;
    std::string artifact_hash;
    std::filesystem::path manifest_path;
};

namespace detail {

// Artifacts are written to <name>.partial and renamed once complete, so a
// failed stage leaves only .partial files behind.
template <typename Writer>
void write_artifact(const std::filesystem::path& dir, const std::string& rel,
                    Writer&& writer) {
    const auto partial = dir / (rel + ".partial");
    writer(partial);
    std::filesystem::rename(partial, dir / rel);
}

class StageClock {
public:
    StageClock(std::map<std::string, double>& sink, std::mutex& mutex,
               std::string stage)
        : sink_(sink), mutex_(mutex), stage_(std::move(stage)),
          start_(std::chrono::steady_clock::now()) {}
    ~StageClock() {
        const auto elapsed = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        std::lock_guard<std::mutex> lock(mutex_);
        sink_[stage_] += elapsed;
    }

private:
    std::map<std::string, double>& sink_;
    std::mutex& mutex_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

// Strips a trailing "_i<seed>" so instances of one problem class aggregate.
inline std::string class_of(const std::string& problem_id) {
    const auto pos = problem_id.rfind("_i");
    if (pos == std::string::npos) return problem_id;
    for (std::size_t i = pos + 2; i < problem_id.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(problem_id[i])))
            return problem_id;
    return pos + 2 < problem_id.size() ? problem_id.substr(0, pos) : problem_id;
}

inline std::uint64_t hash_file(const std::filesystem::path& path,
                               std::uint64_t h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash " + path.string());
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

}  // namespace detail

// End-to-end experiment: run every (algorithm, seed) on every problem
// instance, fit one cluster model per problem on the merged scaled solutions,
// build representations, compute stability and similarity, and write all
// artifacts plus a manifest.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const std::filesystem::path& out_dir,
                                       int jobs = 1) {
    config.validate();
    if (jobs < 1) throw UsageError("jobs must be >= 1");
    std::filesystem::create_directories(out_dir);

    ExperimentResult result;
    result.config_hash = config.hash();
    result.output_dir = out_dir;

    std::mutex timing_mutex;
    for (const char* stage :
         {"run", "merge", "scale", "elbow", "fit", "represent", "metrics"})
        result.timings_ms[stage] = 0.0;

    // Unit of work: one problem instance with all its trajectories.
    struct Unit {
        std::string problem_id;
        int dimension = 0;
        bool builtin = true;
        ProblemInstance instance;               // builtin only
        std::vector<Trajectory> ingested;       // external only
    };
    std::vector<Unit> units;
    for (const auto& spec : config.problems) {
        for (const auto iseed : spec.instance_seeds) {
            Unit u;
            u.instance = make_instance(spec.function, spec.dimension, iseed);
            u.problem_id = u.instance.id();
            u.dimension = spec.dimension;
            units.push_back(std::move(u));
        }
    }
    {
        std::map<std::string, std::size_t> by_id;
        for (const auto& file : config.ingest_files) {
            for (auto& t : read_trajectories(file)) {
                t.validate();
                auto it = by_id.find(t.problem_id);
                if (it == by_id.end()) {
                    Unit u;
                    u.problem_id = t.problem_id;
                    u.dimension = t.dimension();
                    u.builtin = false;
                    by_id.emplace(t.problem_id, units.size());
                    units.push_back(std::move(u));
                    it = by_id.find(t.problem_id);
                }
                units[it->second].ingested.push_back(std::move(t));
            }
        }
    }

    std::vector<ProblemOutput> outputs(units.size());
    std::vector<std::exception_ptr> failures(units.size());
    std::atomic<std::size_t> next_unit{0};

    const auto process_unit = [&](std::size_t ui) {
        const Unit& unit = units[ui];
        ProblemOutput& out = outputs[ui];
        out.problem_id = unit.problem_id;
        out.dimension = unit.dimension;

        const auto stage_guard = [&](const char* stage, auto&& body) {
            detail::StageClock clock(result.timings_ms, timing_mutex, stage);
            try {
                body();
            } catch (const std::exception& e) {
                throw DataError("stage '" + std::string(stage) +
                                "' failed for problem '" + unit.problem_id +
                                "': " + e.what());
            }
        };

        std::vector<Trajectory> trajectories;
        stage_guard("run", [&] {
            if (unit.builtin) {
                for (const auto& alg : config.algorithms) {
                    for (const auto r : config.run_seeds) {
                        const auto effective = derive_seed(
                            config.master_seed, "clustopt.run." + unit.problem_id, r);
                        auto record = run(alg, unit.instance, effective);
                        record.trajectory.seed = r;  // grid label, not the raw stream seed
                        trajectories.push_back(std::move(record.trajectory));
                    }
                }
            } else {
                trajectories = unit.ingested;
            }
            detail::write_artifact(
                out_dir, "trajectories_" + unit.problem_id + ".csv",
                [&](const std::filesystem::path& p) {
                    write_trajectories(trajectories, p);
                });
            out.files.push_back("trajectories_" + unit.problem_id + ".csv");
        });

        MergedSolutionSet merged;
        stage_guard("merge", [&] { merged = merge(trajectories); });

        ClusterModel model;
        Eigen::MatrixXd scaled;
        stage_guard("scale", [&] {
            model.scaler = fit_scaler(merged.points);
            scaled = model.scaler.transform(merged.points);
        });

        int chosen_k = 0;
        stage_guard("elbow", [&] {
            const int hi =
                std::min<int>(config.k_max, static_cast<int>(scaled.rows()));
            const auto sel = select_k_elbow(
                scaled, config.k_min, std::max(config.k_min, hi),
                derive_seed(config.master_seed, "clustopt.kmeans." + unit.problem_id));
            model.k_selection_trace = sel.trace;
            chosen_k = sel.k;
        });

        stage_guard("fit", [&] {
            model.centroids =
                kmeans_fit(scaled, chosen_k,
                           derive_seed(config.master_seed,
                                       "clustopt.kmeans." + unit.problem_id))
                    .centroids;
            detail::write_artifact(out_dir, "model_" + unit.problem_id + ".json",
                                   [&](const std::filesystem::path& p) {
                                       model.save(p);
                                   });
            out.files.push_back("model_" + unit.problem_id + ".json");
            out.chosen_k = chosen_k;
        });

        stage_guard("represent", [&] {
            for (const auto& t : trajectories)
                out.representations.push_back(build_representation(t, model));
            const std::string reps_name = "reps_" + unit.problem_id + ".csv";
            detail::write_artifact(out_dir, reps_name,
                                   [&](const std::filesystem::path& p) {
                                       write_representations(
                                           out.representations, p,
                                           "model_" + unit.problem_id + ".json");
                                   });
            // write_representations drops the sidecar next to the final path
            std::filesystem::rename(out_dir / (reps_name + ".partial.meta.json"),
                                    out_dir / (reps_name + ".meta.json"));
            out.files.push_back(reps_name);
            out.files.push_back(reps_name + ".meta.json");
        });
    };

    {
        std::vector<std::thread> workers;
        const auto worker = [&] {
            for (;;) {
                const std::size_t ui = next_unit.fetch_add(1);
                if (ui >= units.size()) return;
                try {
                    process_unit(ui);
                } catch (...) {
                    failures[ui] = std::current_exception();
                }
            }
        };
        const int n_workers = std::min<int>(jobs, static_cast<int>(units.size()));
        for (int w = 1; w < n_workers; ++w) workers.emplace_back(worker);
        worker();
        for (auto& t : workers) t.join();
    }
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
    result.problems = std::move(outputs);

    // Metrics: stability tables and similarity matrices, one set per dimension.
    {
        detail::StageClock clock(result.timings_ms, timing_mutex, "metrics");
        std::set<int> dimensions;
        for (const auto& p : result.problems) dimensions.insert(p.dimension);

        for (const int dim : dimensions) {
            const std::string suffix = "_d" + std::to_string(dim);
            std::vector<TrajectoryRepresentation> dim_reps;
            for (const auto& p : result.problems) {
                if (p.dimension != dim) continue;
                for (const auto& r : p.representations) dim_reps.push_back(r);
            }

            // Per-instance stability (NaN when fewer than two seeds).
            LabeledMatrix instance_table = stability_table(dim_reps);
            const auto& algorithm_ids = instance_table.col_labels;
            try {
                detail::write_artifact(
                    out_dir, "stability_instances" + suffix + ".csv",
                    [&](const std::filesystem::path& p) {
                        dump_plot_csv(instance_table, p);
                    });
                result.global_files.push_back("stability_instances" + suffix +
                                              ".csv");

                // Class aggregation: mean of the per-instance scores.
                LabeledMatrix class_table;
                class_table.corner = "problem";
                class_table.col_labels = algorithm_ids;
                std::vector<std::string> classes;
                for (const auto& label : instance_table.row_labels) {
                    const auto cls = detail::class_of(label);
                    if (std::find(classes.begin(), classes.end(), cls) ==
                        classes.end())
                        classes.push_back(cls);
                }
                class_table.row_labels = classes;
                class_table.values.resize(
                    static_cast<Eigen::Index>(classes.size()),
                    static_cast<Eigen::Index>(algorithm_ids.size()));
                for (std::size_t ci = 0; ci < classes.size(); ++ci) {
                    for (std::size_t ai = 0; ai < algorithm_ids.size(); ++ai) {
                        double sum = 0.0;
                        int count = 0;
                        for (std::size_t pi = 0; pi < instance_table.row_labels.size();
                             ++pi) {
                            if (detail::class_of(instance_table.row_labels[pi]) !=
                                classes[ci])
                                continue;
                            const double v =
                                instance_table.values(static_cast<Eigen::Index>(pi),
                                                      static_cast<Eigen::Index>(ai));
                            if (!std::isnan(v)) {
                                sum += v;
                                ++count;
                            }
                        }
                        class_table.values(static_cast<Eigen::Index>(ci),
                                           static_cast<Eigen::Index>(ai)) =
                            count > 0 ? sum / count
                                      : std::numeric_limits<double>::quiet_NaN();
                    }
                }
                detail::write_artifact(out_dir, "stability" + suffix + ".csv",
                                       [&](const std::filesystem::path& p) {
                                           dump_plot_csv(class_table, p);
                                       });
                result.global_files.push_back("stability" + suffix + ".csv");
                result.stability_by_instance[dim] = std::move(instance_table);
                result.stability_by_class[dim] = std::move(class_table);

                if (!dim_reps.empty()) {
                    auto sim = similarity_matrix(dim_reps,
                                                 !config.allow_incomplete_grid);
                    LabeledMatrix sim_table;
                    sim_table.corner = "algorithm";
                    sim_table.row_labels = sim.algorithms;
                    sim_table.col_labels = sim.algorithms;
                    sim_table.values = sim.values;
                    detail::write_artifact(out_dir, "similarity" + suffix + ".csv",
                                           [&](const std::filesystem::path& p) {
                                               dump_plot_csv(sim_table, p);
                                           });
                    result.global_files.push_back("similarity" + suffix + ".csv");
                    detail::write_artifact(
                        out_dir, "clustermap" + suffix + ".svg",
                        [&](const std::filesystem::path& p) {
                            render_similarity_clustermap(
                                sim, p,
                                "algorithm similarity, d=" + std::to_string(dim));
                        });
                    result.global_files.push_back("clustermap" + suffix + ".svg");
                    result.similarity_by_dimension[dim] = std::move(sim);
                }
            } catch (const DataError&) {
                throw;
            } catch (const std::exception& e) {
                throw DataError(std::string("stage 'metrics' failed for problem '-': ") +
                                e.what());
            }
        }
    }

    // Artifact hash: every written file, in sorted order, name then content.
    {
        std::vector<std::string> all_files = result.global_files;
        for (const auto& p : result.problems)
            all_files.insert(all_files.end(), p.files.begin(), p.files.end());
        std::sort(all_files.begin(), all_files.end());
        std::uint64_t h = fnv1a64("clustopt.artifacts");
        for (const auto& rel : all_files) {
            h = fnv1a64(rel, h);
            h = detail::hash_file(out_dir / rel, h);
        }
        result.artifact_hash = hex64(h);
    }

    nlohmann::json manifest;
    manifest["format"] = "clustopt-manifest";
    manifest["config_hash"] = result.config_hash;
    manifest["master_seed"] = config.master_seed;
    manifest["artifact_hash"] = result.artifact_hash;
    auto problems_json = nlohmann::json::array();
    for (const auto& p : result.problems) {
        nlohmann::json pj;
        pj["id"] = p.problem_id;
        pj["dimension"] = p.dimension;
        pj["chosen_k"] = p.chosen_k;
        pj["files"] = p.files;
        problems_json.push_back(std::move(pj));
    }
    manifest["problems"] = std::move(problems_json);
    manifest["global_files"] = result.global_files;
    manifest["timings_ms"] = result.timings_ms;
    detail::write_artifact(out_dir, "manifest.json",
                           [&](const std::filesystem::path& p) {
                               std::ofstream out(p);
                               if (!out)
                                   throw DataError("cannot write " + p.string());
                               out << manifest.dump(2) << '\n';
                           });
    result.manifest_path = out_dir / "manifest.json";
    return result;
}

}  // namespace clustopt

#endif
