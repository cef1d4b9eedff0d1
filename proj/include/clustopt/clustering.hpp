#ifndef CLUSTOPT_CLUSTERING_HPP
#define CLUSTOPT_CLUSTERING_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clustopt/common.hpp"
#include "clustopt/rng.hpp"

namespace clustopt {

// Per-dimension min-max scaler fitted on the merged solution set.
struct Scaler {
    Eigen::VectorXd min;
    Eigen::VectorXd max;

    int dimension() const { return static_cast<int>(min.size()); }

    // Maps into [0,1]; a constant dimension (min == max) maps to 0.5.
    Eigen::MatrixXd transform(const Eigen::MatrixXd& points) const {
        if (points.cols() != min.size())
            throw UsageError("scaler: dimension mismatch");
        Eigen::MatrixXd out(points.rows(), points.cols());
        for (int j = 0; j < points.cols(); ++j) {
            const double range = max(j) - min(j);
            if (range > 0.0)
                out.col(j) = (points.col(j).array() - min(j)) / range;
            else
                out.col(j).setConstant(0.5);
        }
        return out;
    }

    Eigen::VectorXd inverse(const Eigen::VectorXd& scaled) const {
        if (scaled.size() != min.size())
            throw UsageError("scaler: dimension mismatch");
        Eigen::VectorXd out(scaled.size());
        for (int j = 0; j < scaled.size(); ++j) {
            const double range = max(j) - min(j);
            out(j) = range > 0.0 ? min(j) + scaled(j) * range : min(j);
        }
        return out;
    }
};

inline Scaler fit_scaler(const Eigen::MatrixXd& points) {
    if (points.rows() < 1) throw UsageError("fit_scaler: empty input");
    Scaler s;
    s.min = points.colwise().minCoeff();
    s.max = points.colwise().maxCoeff();
    return s;
}

struct KMeansResult {
    Eigen::MatrixXd centroids;  // k x d
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // one entry per Lloyd assignment pass
};

namespace detail {

// Nearest-centroid assignment for a block of points.  Shared by Lloyd and
// assign() so training and later assignment agree bit-for-bit; strict < keeps
// the lowest centroid index on ties.
inline void nearest_centroids(const Eigen::MatrixXd& points,
                              const Eigen::MatrixXd& centroids,
                              std::vector<int>& assignment,
                              Eigen::VectorXd& dist2) {
    const Eigen::Index n = points.rows();
    assignment.assign(static_cast<std::size_t>(n), 0);
    dist2.setConstant(n, std::numeric_limits<double>::infinity());
    Eigen::VectorXd cand(n);
    for (int c = 0; c < centroids.rows(); ++c) {
        cand = (points.rowwise() - centroids.row(c)).rowwise().squaredNorm();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (cand(i) < dist2(i)) {
                dist2(i) = cand(i);
                assignment[static_cast<std::size_t>(i)] = c;
            }
        }
    }
}

// Greedy k-means++ seeding: first centroid uniform; each further centroid is
// the best of 2 + log2(k) candidates sampled proportionally to the squared
// distance from the nearest chosen centroid.
inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k,
                                     SplitMix64& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    const auto first = static_cast<Eigen::Index>(
        rng.below(static_cast<std::uint64_t>(n)));
    centroids.row(0) = points.row(first);

    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d2(i) = (points.row(i) - centroids.row(0)).squaredNorm();

    const int local_trials =
        2 + static_cast<int>(std::log2(static_cast<double>(std::max(2, k))));
    Eigen::VectorXd cand_d2(n), best_d2(n);
    for (int c = 1; c < k; ++c) {
        Eigen::Index best_choice = -1;
        double best_potential = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < local_trials; ++trial) {
            const double total = d2.sum();
            Eigen::Index chosen;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double cum = 0.0;
                chosen = n - 1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    cum += d2(i);
                    if (cum >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                // all remaining distances zero (duplicate points)
                chosen = static_cast<Eigen::Index>(
                    rng.below(static_cast<std::uint64_t>(n)));
            }
            double potential = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cand_d2(i) = std::min(
                    d2(i), (points.row(i) - points.row(chosen)).squaredNorm());
                potential += cand_d2(i);
            }
            if (potential < best_potential) {
                best_potential = potential;
                best_choice = chosen;
                best_d2 = cand_d2;
            }
        }
        centroids.row(c) = points.row(best_choice);
        d2 = best_d2;
    }
    return centroids;
}

}  // namespace detail

namespace detail {

// One Lloyd run from a k-means++ seeding.  Stops when assignments are stable
// or after 300 iterations.  Empty clusters are repaired by reseeding the
// centroid at the point farthest from its assigned centroid.
inline KMeansResult lloyd_once(const Eigen::MatrixXd& points, int k,
                               SplitMix64& rng) {
    const Eigen::Index n = points.rows();
    KMeansResult result;
    result.centroids = kmeanspp_init(points, k, rng);

    constexpr int kMaxLloydIterations = 300;
    std::vector<int> previous;
    Eigen::VectorXd dist2(n);
    for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
        nearest_centroids(points, result.centroids, result.assignments, dist2);
        result.inertia = dist2.sum();
        result.inertia_trace.push_back(result.inertia);
        if (result.assignments == previous) break;
        previous = result.assignments;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto a =
                static_cast<std::size_t>(result.assignments[static_cast<std::size_t>(i)]);
            sums.row(static_cast<Eigen::Index>(a)) += points.row(i);
            ++counts[a];
        }
        std::vector<Eigen::Index> reseeded;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                result.centroids.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // farthest point from its assigned centroid, skipping points
                // already consumed by another repair this pass
                Eigen::Index far = -1;
                double far_d2 = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (std::find(reseeded.begin(), reseeded.end(), i) !=
                        reseeded.end())
                        continue;
                    if (dist2(i) > far_d2) {
                        far_d2 = dist2(i);
                        far = i;
                    }
                }
                result.centroids.row(c) = points.row(far);
                reseeded.push_back(far);
            }
        }
    }
    return result;
}

}  // namespace detail

// Lloyd iterations with greedy k-means++ seeding, best of n_init independent
// initializations (ties keep the first).  Deterministic per seed.
inline KMeansResult kmeans_fit(const Eigen::MatrixXd& points, int k,
                               std::uint64_t seed, int n_init = 10) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw UsageError("kmeans_fit: k must be >= 1");
    if (static_cast<Eigen::Index>(k) > n)
        throw UsageError("kmeans_fit: k = " + std::to_string(k) + " exceeds " +
                         std::to_string(n) + " points");
    if (n_init < 1) throw UsageError("kmeans_fit: n_init must be >= 1");

    SplitMix64 rng(derive_seed(seed, "clustopt.kmeans"));
    KMeansResult best;
    for (int init = 0; init < n_init; ++init) {
        auto candidate = detail::lloyd_once(points, k, rng);
        if (init == 0 || candidate.inertia < best.inertia)
            best = std::move(candidate);
    }
    return best;
}

struct KSelection {
    int k = 0;
    std::vector<std::pair<int, double>> trace;  // (k, best-of-restarts inertia)
};

namespace detail {

// Knee of an inertia-versus-k curve: normalize both axes to [0,1], return the
// k with the largest perpendicular distance to the chord joining the
// endpoints.  Ties (including a degenerate chord) go to the smallest k.
inline int knee_of_trace(const std::vector<std::pair<int, double>>& trace) {
    const int k_min = trace.front().first;
    const int k_max = trace.back().first;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [k, inertia] : trace) {
        lo = std::min(lo, inertia);
        hi = std::max(hi, inertia);
    }
    const double span = hi - lo;
    const auto norm_u = [&](int k) {
        return static_cast<double>(k - k_min) / (k_max - k_min);
    };
    const auto norm_w = [&](double inertia) {
        return span > 0.0 ? (inertia - lo) / span : 0.0;
    };
    const double u0 = norm_u(trace.front().first);
    const double w0 = norm_w(trace.front().second);
    const double u1 = norm_u(trace.back().first);
    const double w1 = norm_w(trace.back().second);
    const double chord = std::sqrt((u1 - u0) * (u1 - u0) + (w1 - w0) * (w1 - w0));

    int knee = k_min;
    double best_dist = -std::numeric_limits<double>::infinity();
    for (const auto& [k, inertia] : trace) {
        const double u = norm_u(k);
        const double w = norm_w(inertia);
        const double dist =
            chord > 0.0
                ? std::abs((u1 - u0) * (w0 - w) - (u0 - u) * (w1 - w0)) / chord
                : 0.0;
        if (dist > best_dist) {  // strict: first (smallest) k wins ties
            best_dist = dist;
            knee = k;
        }
    }
    return knee;
}

}  // namespace detail

// Elbow selection: fit each k in [k_min, k_max] (best of 3 restarts), then
// pick the knee of the inertia curve.
inline KSelection select_k_elbow(const Eigen::MatrixXd& points, int k_min,
                                 int k_max, std::uint64_t seed) {
    if (k_min < 2) throw UsageError("select_k_elbow: k_min must be >= 2");
    if (k_max < k_min) throw UsageError("select_k_elbow: k_max < k_min");
    if (static_cast<Eigen::Index>(k_max) > points.rows())
        throw UsageError("select_k_elbow: k_max exceeds point count");

    constexpr int kRestarts = 3;
    KSelection sel;
    for (int k = k_min; k <= k_max; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < kRestarts; ++r) {
            const auto fit = kmeans_fit(
                points, k,
                derive_seed(seed, "clustopt.elbow",
                            (static_cast<std::uint64_t>(k) << 8) |
                                static_cast<std::uint64_t>(r)),
                /*n_init=*/1);
            best = std::min(best, fit.inertia);
        }
        sel.trace.emplace_back(k, best);
    }

    if (sel.trace.size() < 3) {
        warn("select_k_elbow: fewer than 3 candidate k values, returning k_min");
        sel.k = k_min;
        return sel;
    }
    sel.k = detail::knee_of_trace(sel.trace);
    return sel;
}

// Fitted scaler + centroids in scaled space; the unit shared by every
// representation built for one problem.
struct ClusterModel {
    Scaler scaler;
    Eigen::MatrixXd centroids;  // c x d, scaled space
    std::vector<std::pair<int, double>> k_selection_trace;

    int cluster_count() const { return static_cast<int>(centroids.rows()); }
    int dimension() const { return static_cast<int>(centroids.cols()); }

    // Identity of the fitted model; stamped on representations so metrics can
    // reject comparisons across different models.
    std::string fingerprint() const {
        std::uint64_t h = fnv1a64("clustopt.model");
        auto mix_vec = [&h](const Eigen::VectorXd& v) {
            h = fnv1a64(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()), h);
        };
        mix_vec(scaler.min);
        mix_vec(scaler.max);
        for (int c = 0; c < centroids.rows(); ++c) {
            const Eigen::VectorXd row = centroids.row(c);
            mix_vec(row);
        }
        return hex64(h);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format"] = "clustopt-cluster-model";
        j["version"] = 1;
        j["scaler"]["min"] = std::vector<double>(scaler.min.data(),
                                                 scaler.min.data() + scaler.min.size());
        j["scaler"]["max"] = std::vector<double>(scaler.max.data(),
                                                 scaler.max.data() + scaler.max.size());
        auto rows = nlohmann::json::array();
        for (int c = 0; c < centroids.rows(); ++c) {
            auto row = nlohmann::json::array();
            for (int d = 0; d < centroids.cols(); ++d) row.push_back(centroids(c, d));
            rows.push_back(std::move(row));
        }
        j["centroids"] = std::move(rows);
        auto trace = nlohmann::json::array();
        for (const auto& [k, inertia] : k_selection_trace)
            trace.push_back({k, inertia});
        j["k_selection_trace"] = std::move(trace);
        return j;
    }

    static ClusterModel from_json(const nlohmann::json& j) {
        try {
            if (j.at("format") != "clustopt-cluster-model")
                throw DataError("not a cluster model file");
            ClusterModel m;
            const auto mins = j.at("scaler").at("min").get<std::vector<double>>();
            const auto maxs = j.at("scaler").at("max").get<std::vector<double>>();
            if (mins.size() != maxs.size())
                throw DataError("cluster model: scaler min/max size mismatch");
            m.scaler.min = Eigen::Map<const Eigen::VectorXd>(
                mins.data(), static_cast<Eigen::Index>(mins.size()));
            m.scaler.max = Eigen::Map<const Eigen::VectorXd>(
                maxs.data(), static_cast<Eigen::Index>(maxs.size()));
            const auto& rows = j.at("centroids");
            if (rows.empty()) throw DataError("cluster model: no centroids");
            m.centroids.resize(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(mins.size()));
            for (std::size_t c = 0; c < rows.size(); ++c) {
                const auto row = rows[c].get<std::vector<double>>();
                if (row.size() != mins.size())
                    throw DataError("cluster model: centroid dimension mismatch");
                for (std::size_t d = 0; d < row.size(); ++d)
                    m.centroids(static_cast<Eigen::Index>(c),
                                static_cast<Eigen::Index>(d)) = row[d];
            }
            if (j.contains("k_selection_trace"))
                for (const auto& entry : j.at("k_selection_trace"))
                    m.k_selection_trace.emplace_back(entry.at(0).get<int>(),
                                                     entry.at(1).get<double>());
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("cluster model: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path.string());
        out << to_json().dump(2) << '\n';
        if (!out) throw DataError("write failed for " + path.string());
    }

    static ClusterModel load(const std::filesystem::path& path) {
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

// Scale the merged points, pick k (elbow when requested_k == 0), fit the
// final model with the given seed.
inline ClusterModel fit_cluster_model(const Eigen::MatrixXd& raw_points,
                                      int requested_k, int k_min, int k_max,
                                      std::uint64_t seed) {
    ClusterModel model;
    model.scaler = fit_scaler(raw_points);
    const Eigen::MatrixXd scaled = model.scaler.transform(raw_points);
    int k = requested_k;
    if (k == 0) {
        const int hi = std::min<int>(k_max, static_cast<int>(scaled.rows()));
        const auto sel = select_k_elbow(scaled, k_min, std::max(k_min, hi), seed);
        model.k_selection_trace = sel.trace;
        k = sel.k;
    }
    model.centroids = kmeans_fit(scaled, k, seed).centroids;
    return model;
}

// Nearest-centroid assignment of raw (unscaled) points.
inline std::vector<int> assign(const ClusterModel& model,
                               const Eigen::MatrixXd& raw_points) {
    if (raw_points.cols() != model.dimension())
        throw UsageError("assign: point dimension " +
                         std::to_string(raw_points.cols()) +
                         " does not match model dimension " +
                         std::to_string(model.dimension()));
    const Eigen::MatrixXd scaled = model.scaler.transform(raw_points);
    std::vector<int> out;
    Eigen::VectorXd dist2;
    detail::nearest_centroids(scaled, model.centroids, out, dist2);
    return out;
}

}  // namespace clustopt

#endif
