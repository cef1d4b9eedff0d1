#ifndef CLUSTOPT_TRAJECTORY_HPP
#define CLUSTOPT_TRAJECTORY_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "clustopt/common.hpp"

namespace clustopt {

// Full record of one seeded run: every candidate solution of every iteration,
// iteration 0 being the initial population.
struct Trajectory {
    std::string algorithm_id;
    std::string problem_id;
    std::uint64_t seed = 0;
    std::vector<Eigen::MatrixXd> populations;  // b entries, each s x d
    std::vector<Eigen::VectorXd> fitness;      // b entries, each length s

    int iterations() const { return static_cast<int>(populations.size()); }
    int population_size() const {
        return populations.empty() ? 0 : static_cast<int>(populations[0].rows());
    }
    int dimension() const {
        return populations.empty() ? 0 : static_cast<int>(populations[0].cols());
    }

    void validate() const {
        if (populations.empty())
            throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                            ": no iterations");
        if (fitness.size() != populations.size())
            throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                            ": fitness/population iteration count mismatch");
        const auto rows = populations[0].rows();
        const auto cols = populations[0].cols();
        if (rows < 1 || cols < 1)
            throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                            ": empty population");
        for (std::size_t it = 0; it < populations.size(); ++it) {
            if (populations[it].rows() != rows || populations[it].cols() != cols)
                throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                                ": inconsistent population shape at iteration " +
                                std::to_string(it));
            if (fitness[it].size() != rows)
                throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                                ": fitness length mismatch at iteration " +
                                std::to_string(it));
            if (!populations[it].allFinite() || !fitness[it].allFinite())
                throw DataError("trajectory " + algorithm_id + "/" + problem_id +
                                ": non-finite values at iteration " +
                                std::to_string(it));
        }
    }
};

struct SolutionRef {
    int trajectory = 0;
    int iteration = 0;
    int slot = 0;
};

// All candidate solutions of a set of runs on one problem, stacked row-wise
// with provenance preserved (input order, then iteration, then slot).
struct MergedSolutionSet {
    Eigen::MatrixXd points;  // N x d
    std::vector<SolutionRef> index;
};

inline MergedSolutionSet merge(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw UsageError("merge: no trajectories");
    const int d = trajectories[0].dimension();
    const std::string& problem = trajectories[0].problem_id;
    Eigen::Index total = 0;
    for (const auto& t : trajectories) {
        if (t.dimension() != d)
            throw UsageError("merge: mixed dimensions (" + std::to_string(d) +
                             " vs " + std::to_string(t.dimension()) + ")");
        if (t.problem_id != problem)
            throw UsageError("merge: mixed problems ('" + problem + "' vs '" +
                             t.problem_id + "')");
        total += static_cast<Eigen::Index>(t.iterations()) * t.population_size();
    }
    MergedSolutionSet merged;
    merged.points.resize(total, d);
    merged.index.reserve(static_cast<std::size_t>(total));
    Eigen::Index row = 0;
    for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
        const auto& t = trajectories[ti];
        for (int it = 0; it < t.iterations(); ++it) {
            for (int slot = 0; slot < t.population_size(); ++slot) {
                merged.points.row(row) = t.populations[it].row(slot);
                merged.index.push_back({static_cast<int>(ti), it, slot});
                ++row;
            }
        }
    }
    return merged;
}

namespace detail {

// %.17g keeps doubles bit-exact through a write/read round trip.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double_field(const std::string& s, std::size_t line_no,
                                 const char* what) {
    if (s.empty())
        throw DataError("line " + std::to_string(line_no) + ": empty " + what);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw DataError("line " + std::to_string(line_no) + ": bad " + what +
                        " '" + s + "'");
    if (!std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) + ": non-finite " +
                        what + " '" + s + "'");
    return v;
}

inline long long parse_int_field(const std::string& s, std::size_t line_no,
                                 const char* what) {
    if (s.empty())
        throw DataError("line " + std::to_string(line_no) + ": empty " + what);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size())
        throw DataError("line " + std::to_string(line_no) + ": bad " + what +
                        " '" + s + "'");
    return v;
}

}  // namespace detail

// Trajectory CSV: one row per candidate solution.
//   algorithm,problem,seed,iteration,slot,fitness,x0,...,x{d-1}
inline void write_trajectories(const std::vector<Trajectory>& trajectories,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    int d = trajectories.empty() ? 0 : trajectories[0].dimension();
    out << "algorithm,problem,seed,iteration,slot,fitness";
    for (int j = 0; j < d; ++j) out << ",x" << j;
    out << '\n';
    for (const auto& t : trajectories) {
        t.validate();
        if (t.dimension() != d)
            throw UsageError("write_trajectories: mixed dimensions");
        for (int it = 0; it < t.iterations(); ++it) {
            for (int slot = 0; slot < t.population_size(); ++slot) {
                out << t.algorithm_id << ',' << t.problem_id << ',' << t.seed
                    << ',' << it << ',' << slot << ','
                    << detail::format_double(t.fitness[it](slot));
                for (int j = 0; j < d; ++j)
                    out << ',' << detail::format_double(t.populations[it](slot, j));
                out << '\n';
            }
        }
    }
    if (!out) throw DataError("write failed for " + path.string());
}

inline std::vector<Trajectory> read_trajectories(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) return {};  // empty file: empty list
    const auto header = detail::split_csv_line(line);
    if (header.size() < 7 || header[0] != "algorithm" || header[1] != "problem" ||
        header[2] != "seed" || header[3] != "iteration" || header[4] != "slot" ||
        header[5] != "fitness")
        throw DataError("line 1: bad trajectory header");
    const int d = static_cast<int>(header.size()) - 6;
    for (int j = 0; j < d; ++j)
        if (header[static_cast<std::size_t>(6 + j)] != "x" + std::to_string(j))
            throw DataError("line 1: bad coordinate column " +
                            header[static_cast<std::size_t>(6 + j)]);

    struct Row {
        int iteration;
        int slot;
        double fitness;
        Eigen::VectorXd x;
        std::size_t line_no;
    };
    using Key = std::tuple<std::string, std::string, std::uint64_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<Row>> groups;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Row row;
        row.line_no = line_no;
        row.iteration = static_cast<int>(
            detail::parse_int_field(fields[3], line_no, "iteration"));
        row.slot =
            static_cast<int>(detail::parse_int_field(fields[4], line_no, "slot"));
        if (row.iteration < 0 || row.slot < 0)
            throw DataError("line " + std::to_string(line_no) +
                            ": negative iteration or slot");
        row.fitness = detail::parse_double_field(fields[5], line_no, "fitness");
        row.x.resize(d);
        for (int j = 0; j < d; ++j)
            row.x(j) = detail::parse_double_field(
                fields[static_cast<std::size_t>(6 + j)], line_no, "coordinate");
        Key key{fields[0], fields[1],
                static_cast<std::uint64_t>(
                    detail::parse_int_field(fields[2], line_no, "seed"))};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(std::move(row));
    }

    std::vector<Trajectory> result;
    result.reserve(order.size());
    for (const auto& key : order) {
        const auto& rows = groups[key];
        int b = 0, s = 0;
        for (const auto& r : rows) {
            b = std::max(b, r.iteration + 1);
            s = std::max(s, r.slot + 1);
        }
        Trajectory t;
        t.algorithm_id = std::get<0>(key);
        t.problem_id = std::get<1>(key);
        t.seed = std::get<2>(key);
        t.populations.assign(static_cast<std::size_t>(b),
                             Eigen::MatrixXd::Zero(s, d));
        t.fitness.assign(static_cast<std::size_t>(b), Eigen::VectorXd::Zero(s));
        std::vector<std::vector<bool>> seen(
            static_cast<std::size_t>(b),
            std::vector<bool>(static_cast<std::size_t>(s), false));
        for (const auto& r : rows) {
            auto cell = seen[static_cast<std::size_t>(r.iteration)]
                            [static_cast<std::size_t>(r.slot)];
            if (cell)
                throw DataError("line " + std::to_string(r.line_no) +
                                ": duplicate (iteration, slot) for trajectory " +
                                t.algorithm_id + "/" + t.problem_id + "/seed " +
                                std::to_string(t.seed));
            cell = true;
            t.populations[static_cast<std::size_t>(r.iteration)].row(r.slot) = r.x;
            t.fitness[static_cast<std::size_t>(r.iteration)](r.slot) = r.fitness;
        }
        if (rows.size() != static_cast<std::size_t>(b) * static_cast<std::size_t>(s))
            throw DataError("trajectory " + t.algorithm_id + "/" + t.problem_id +
                            "/seed " + std::to_string(t.seed) +
                            ": iterations and slots are not contiguous (" +
                            std::to_string(rows.size()) + " rows for " +
                            std::to_string(b) + "x" + std::to_string(s) +
                            " grid)");
        result.push_back(std::move(t));
    }
    return result;
}

}  // namespace clustopt

#endif
