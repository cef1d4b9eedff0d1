#ifndef CLUSTOPT_REPRESENTATION_HPP
#define CLUSTOPT_REPRESENTATION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "clustopt/clustering.hpp"
#include "clustopt/common.hpp"
#include "clustopt/trajectory.hpp"

namespace clustopt {

// The b x c matrix of per-iteration cluster membership counts; flattened
// iteration-major it is the trajectory's feature vector.
struct TrajectoryRepresentation {
    std::string algorithm_id;
    std::string problem_id;
    std::uint64_t seed = 0;
    Eigen::MatrixXi counts;  // b x c, every row sums to the population size
    std::string model_fingerprint;

    int iterations() const { return static_cast<int>(counts.rows()); }
    int cluster_count() const { return static_cast<int>(counts.cols()); }

    // flat[i*c + j] = counts(i, j)
    Eigen::VectorXd flat() const {
        Eigen::VectorXd v(counts.size());
        Eigen::Index idx = 0;
        for (int i = 0; i < counts.rows(); ++i)
            for (int j = 0; j < counts.cols(); ++j)
                v(idx++) = static_cast<double>(counts(i, j));
        return v;
    }
};

inline TrajectoryRepresentation build_representation(const Trajectory& traj,
                                                     const ClusterModel& model) {
    if (traj.dimension() != model.dimension())
        throw UsageError("build_representation: trajectory dimension " +
                         std::to_string(traj.dimension()) +
                         " does not match model dimension " +
                         std::to_string(model.dimension()));
    TrajectoryRepresentation rep;
    rep.algorithm_id = traj.algorithm_id;
    rep.problem_id = traj.problem_id;
    rep.seed = traj.seed;
    rep.model_fingerprint = model.fingerprint();
    rep.counts = Eigen::MatrixXi::Zero(traj.iterations(), model.cluster_count());
    for (int it = 0; it < traj.iterations(); ++it) {
        const auto assignments = assign(model, traj.populations[static_cast<std::size_t>(it)]);
        for (int a : assignments) ++rep.counts(it, a);
    }
    return rep;
}

// Representation CSV: algorithm,problem,seed,iteration,cluster_0,...  A
// sidecar JSON (<path>.meta.json) names the cluster model the counts were
// built against.
inline void write_representations(
    const std::vector<TrajectoryRepresentation>& reps,
    const std::filesystem::path& path, const std::string& model_file) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const int c = reps.empty() ? 0 : reps[0].cluster_count();
    out << "algorithm,problem,seed,iteration";
    for (int j = 0; j < c; ++j) out << ",cluster_" << j;
    out << '\n';
    for (const auto& rep : reps) {
        if (rep.cluster_count() != c)
            throw UsageError("write_representations: mixed cluster counts");
        for (int it = 0; it < rep.iterations(); ++it) {
            out << rep.algorithm_id << ',' << rep.problem_id << ',' << rep.seed
                << ',' << it;
            for (int j = 0; j < c; ++j) out << ',' << rep.counts(it, j);
            out << '\n';
        }
    }
    if (!out) throw DataError("write failed for " + path.string());

    nlohmann::json meta;
    meta["model_file"] = model_file;
    if (!reps.empty()) meta["model_fingerprint"] = reps[0].model_fingerprint;
    std::ofstream meta_out(path.string() + ".meta.json");
    if (!meta_out) throw DataError("cannot write " + path.string() + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

struct RepresentationFile {
    std::vector<TrajectoryRepresentation> representations;
    std::string model_file;  // from the sidecar, empty if absent
};

inline RepresentationFile read_representations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    RepresentationFile file;

    std::string line;
    if (!std::getline(in, line)) return file;
    const auto header = detail::split_csv_line(line);
    if (header.size() < 5 || header[0] != "algorithm" || header[1] != "problem" ||
        header[2] != "seed" || header[3] != "iteration")
        throw DataError("line 1: bad representation header");
    const int c = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < c; ++j)
        if (header[static_cast<std::size_t>(4 + j)] != "cluster_" + std::to_string(j))
            throw DataError("line 1: bad cluster column " +
                            header[static_cast<std::size_t>(4 + j)]);

    using Key = std::tuple<std::string, std::string, std::uint64_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<std::pair<int, Eigen::VectorXi>>> groups;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        const int iteration = static_cast<int>(
            detail::parse_int_field(fields[3], line_no, "iteration"));
        if (iteration < 0)
            throw DataError("line " + std::to_string(line_no) +
                            ": negative iteration");
        Eigen::VectorXi row(c);
        for (int j = 0; j < c; ++j) {
            const auto v = detail::parse_int_field(
                fields[static_cast<std::size_t>(4 + j)], line_no, "count");
            if (v < 0)
                throw DataError("line " + std::to_string(line_no) +
                                ": negative count");
            row(j) = static_cast<int>(v);
        }
        Key key{fields[0], fields[1],
                static_cast<std::uint64_t>(
                    detail::parse_int_field(fields[2], line_no, "seed"))};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.emplace_back(iteration, std::move(row));
    }

    std::string fingerprint;
    const std::filesystem::path meta_path(path.string() + ".meta.json");
    if (std::filesystem::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        nlohmann::json meta;
        try {
            meta_in >> meta;
            file.model_file = meta.value("model_file", "");
            fingerprint = meta.value("model_fingerprint", "");
        } catch (const nlohmann::json::exception& e) {
            throw DataError(meta_path.string() + ": " + e.what());
        }
    }

    for (const auto& key : order) {
        const auto& rows = groups[key];
        int b = 0;
        for (const auto& [iteration, row] : rows) b = std::max(b, iteration + 1);
        if (rows.size() != static_cast<std::size_t>(b))
            throw DataError("representation " + std::get<0>(key) + "/" +
                            std::get<1>(key) + "/seed " +
                            std::to_string(std::get<2>(key)) +
                            ": iterations are not contiguous");
        TrajectoryRepresentation rep;
        rep.algorithm_id = std::get<0>(key);
        rep.problem_id = std::get<1>(key);
        rep.seed = std::get<2>(key);
        rep.model_fingerprint = fingerprint;
        rep.counts.setZero(b, c);
        std::vector<bool> seen(static_cast<std::size_t>(b), false);
        for (const auto& [iteration, row] : rows) {
            if (seen[static_cast<std::size_t>(iteration)])
                throw DataError("representation " + rep.algorithm_id +
                                ": duplicate iteration " + std::to_string(iteration));
            seen[static_cast<std::size_t>(iteration)] = true;
            rep.counts.row(iteration) = row;
        }
        file.representations.push_back(std::move(rep));
    }
    return file;
}

}  // namespace clustopt

#endif
