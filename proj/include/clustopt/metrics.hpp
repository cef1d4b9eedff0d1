#ifndef CLUSTOPT_METRICS_HPP
#define CLUSTOPT_METRICS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clustopt/common.hpp"
#include "clustopt/representation.hpp"

namespace clustopt {

inline double cosine_similarity(const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v) {
    if (u.size() != v.size())
        throw UsageError("cosine_similarity: length mismatch (" +
                         std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()) + ")");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
        warn("cosine_similarity: zero vector, returning 0");
        return 0.0;
    }
    if (u == v) return 1.0;  // self-similarity is exactly 1, not 1 - 1ulp
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

// Stability of one algorithm on one problem: mean pairwise cosine similarity
// of its representations across initialization seeds.
struct StabilityReport {
    std::string algorithm_id;
    std::string problem_id;
    double score = 0.0;
    Eigen::MatrixXd pairwise;  // |R| x |R|, symmetric, unit diagonal
    std::vector<std::uint64_t> seeds;
};

namespace detail {

inline void require_comparable(const TrajectoryRepresentation& a,
                               const TrajectoryRepresentation& b) {
    if (a.iterations() != b.iterations() || a.cluster_count() != b.cluster_count())
        throw UsageError("representations are not comparable: shapes " +
                         std::to_string(a.iterations()) + "x" +
                         std::to_string(a.cluster_count()) + " vs " +
                         std::to_string(b.iterations()) + "x" +
                         std::to_string(b.cluster_count()));
    if (!a.model_fingerprint.empty() && !b.model_fingerprint.empty() &&
        a.model_fingerprint != b.model_fingerprint)
        throw UsageError("representations built against different cluster models");
}

}  // namespace detail

inline StabilityReport stability(
    const std::vector<TrajectoryRepresentation>& reps) {
    if (reps.size() < 2)
        throw UsageError("stability: needs at least 2 seeded runs");
    for (const auto& r : reps) {
        if (r.algorithm_id != reps[0].algorithm_id)
            throw UsageError("stability: mixed algorithms");
        if (r.problem_id != reps[0].problem_id)
            throw UsageError("stability: mixed problems");
        detail::require_comparable(reps[0], r);
    }

    const auto n = static_cast<Eigen::Index>(reps.size());
    StabilityReport report;
    report.algorithm_id = reps[0].algorithm_id;
    report.problem_id = reps[0].problem_id;
    report.pairwise.setOnes(n, n);
    for (const auto& r : reps) report.seeds.push_back(r.seed);

    std::vector<Eigen::VectorXd> flats;
    flats.reserve(reps.size());
    for (const auto& r : reps) flats.push_back(r.flat());

    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double sim = cosine_similarity(flats[static_cast<std::size_t>(i)],
                                                 flats[static_cast<std::size_t>(j)]);
            report.pairwise(i, j) = sim;
            report.pairwise(j, i) = sim;
            sum += sim;
        }
    }
    // Unordered-pair mean; equal to the ordered mean by cosine symmetry.
    report.score = sum / (static_cast<double>(n) * (n - 1) / 2.0);
    return report;
}

namespace detail {

using CellKey = std::pair<std::string, std::uint64_t>;  // (problem, seed)

inline std::map<CellKey, const TrajectoryRepresentation*> cell_index(
    const std::vector<const TrajectoryRepresentation*>& reps) {
    std::map<CellKey, const TrajectoryRepresentation*> cells;
    for (const auto* r : reps) {
        auto [it, inserted] = cells.try_emplace({r->problem_id, r->seed}, r);
        if (!inserted)
            throw UsageError("duplicate representation for algorithm " +
                             r->algorithm_id + ", problem " + r->problem_id +
                             ", seed " + std::to_string(r->seed));
    }
    return cells;
}

}  // namespace detail

// Mean same-seed cosine similarity between two algorithms across all
// (problem, seed) cells.  strict = fail on a missing cell; otherwise the mean
// renormalizes over the cells present on both sides.
inline double similarity(const std::vector<const TrajectoryRepresentation*>& a,
                         const std::vector<const TrajectoryRepresentation*>& b,
                         bool strict = true) {
    const auto cells_a = detail::cell_index(a);
    const auto cells_b = detail::cell_index(b);
    std::set<detail::CellKey> keys;
    for (const auto& [key, rep] : cells_a) keys.insert(key);
    for (const auto& [key, rep] : cells_b) keys.insert(key);

    double sum = 0.0;
    int count = 0;
    for (const auto& key : keys) {
        const auto ita = cells_a.find(key);
        const auto itb = cells_b.find(key);
        if (ita == cells_a.end() || itb == cells_b.end()) {
            if (strict)
                throw UsageError("similarity: missing representation for problem " +
                                 key.first + ", seed " + std::to_string(key.second));
            continue;
        }
        detail::require_comparable(*ita->second, *itb->second);
        sum += cosine_similarity(ita->second->flat(), itb->second->flat());
        ++count;
    }
    if (count == 0) throw UsageError("similarity: no comparable cells");
    return sum / count;
}

struct SimilarityMatrix {
    std::vector<std::string> algorithms;
    Eigen::MatrixXd values;  // symmetric, entries in [0,1] for count vectors
    std::vector<std::pair<std::string, Eigen::MatrixXd>> per_problem;
    std::vector<int> leaf_order;  // clustermap display order
};

// Average-linkage (UPGMA) agglomeration on 1 - similarity; the dendrogram
// leaf sequence orders the clustermap axes.
inline std::vector<int> average_linkage_order(const Eigen::MatrixXd& sim) {
    const auto n = sim.rows();
    if (n == 0) return {};
    struct Cluster {
        std::vector<int> leaves;
        bool active = true;
    };
    std::vector<Cluster> clusters(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        clusters[static_cast<std::size_t>(i)].leaves = {static_cast<int>(i)};
    Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(n, n) - sim;

    for (Eigen::Index round = 0; round + 1 < n; ++round) {
        Eigen::Index bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!clusters[static_cast<std::size_t>(i)].active) continue;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!clusters[static_cast<std::size_t>(j)].active) continue;
                if (dist(i, j) < best) {  // strict: lexicographic tie-break
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        auto& a = clusters[static_cast<std::size_t>(bi)];
        auto& b = clusters[static_cast<std::size_t>(bj)];
        const auto wa = static_cast<double>(a.leaves.size());
        const auto wb = static_cast<double>(b.leaves.size());
        for (Eigen::Index m = 0; m < n; ++m) {
            if (m == bi || m == bj) continue;
            dist(bi, m) = dist(m, bi) =
                (wa * dist(bi, m) + wb * dist(bj, m)) / (wa + wb);
        }
        a.leaves.insert(a.leaves.end(), b.leaves.begin(), b.leaves.end());
        b.active = false;
    }
    for (const auto& c : clusters)
        if (c.active) return c.leaves;
    return {};
}

// Row/column-labelled matrix used for the stability and similarity exports.
// NaN marks an absent value (for example stability with a single seed).
struct LabeledMatrix {
    std::string corner;  // header name of the label column
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    Eigen::MatrixXd values;
};

// Stability of every (algorithm, problem) group in the list: rows are
// problems, columns algorithms, both in first-appearance order.  Groups with
// fewer than two seeds are reported as absent (NaN), not as errors.
inline LabeledMatrix stability_table(
    const std::vector<TrajectoryRepresentation>& reps) {
    std::vector<std::string> problems, algorithms;
    for (const auto& r : reps) {
        if (std::find(problems.begin(), problems.end(), r.problem_id) ==
            problems.end())
            problems.push_back(r.problem_id);
        if (std::find(algorithms.begin(), algorithms.end(), r.algorithm_id) ==
            algorithms.end())
            algorithms.push_back(r.algorithm_id);
    }
    LabeledMatrix table;
    table.corner = "problem";
    table.row_labels = problems;
    table.col_labels = algorithms;
    table.values.setConstant(static_cast<Eigen::Index>(problems.size()),
                             static_cast<Eigen::Index>(algorithms.size()),
                             std::numeric_limits<double>::quiet_NaN());
    for (std::size_t pi = 0; pi < problems.size(); ++pi) {
        for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
            std::vector<TrajectoryRepresentation> group;
            for (const auto& r : reps)
                if (r.problem_id == problems[pi] && r.algorithm_id == algorithms[ai])
                    group.push_back(r);
            if (group.size() >= 2)
                table.values(static_cast<Eigen::Index>(pi),
                             static_cast<Eigen::Index>(ai)) =
                    stability(group).score;
        }
    }
    return table;
}

// Full pairwise similarity over every algorithm found in the representations.
// Requires a complete (algorithm x problem x seed) grid unless strict=false.
inline SimilarityMatrix similarity_matrix(
    const std::vector<TrajectoryRepresentation>& reps, bool strict = true) {
    if (reps.empty()) throw UsageError("similarity_matrix: no representations");

    std::vector<std::string> algorithms;
    std::map<std::string, std::vector<const TrajectoryRepresentation*>> by_alg;
    std::set<std::string> problems;
    for (const auto& r : reps) {
        auto [it, inserted] = by_alg.try_emplace(r.algorithm_id);
        if (inserted) algorithms.push_back(r.algorithm_id);
        it->second.push_back(&r);
        problems.insert(r.problem_id);
    }

    const auto n = static_cast<Eigen::Index>(algorithms.size());
    SimilarityMatrix out;
    out.algorithms = algorithms;
    out.values.setOnes(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = similarity(by_alg[algorithms[static_cast<std::size_t>(i)]],
                                        by_alg[algorithms[static_cast<std::size_t>(j)]],
                                        strict);
            out.values(i, j) = v;
            out.values(j, i) = v;
        }

    for (const auto& problem : problems) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) {
                std::vector<const TrajectoryRepresentation*> pa, pb;
                for (const auto* r : by_alg[algorithms[static_cast<std::size_t>(i)]])
                    if (r->problem_id == problem) pa.push_back(r);
                for (const auto* r : by_alg[algorithms[static_cast<std::size_t>(j)]])
                    if (r->problem_id == problem) pb.push_back(r);
                const double v = similarity(pa, pb, strict);
                m(i, j) = v;
                m(j, i) = v;
            }
        out.per_problem.emplace_back(problem, std::move(m));
    }

    out.leaf_order = average_linkage_order(out.values);
    return out;
}

}  // namespace clustopt

#endif
