#ifndef CLUSTOPT_PROBLEMS_HPP
#define CLUSTOPT_PROBLEMS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "clustopt/common.hpp"
#include "clustopt/rng.hpp"

namespace clustopt {

enum class FunctionId { Sphere, Ellipsoid, LinearSlope, Rastrigin, Weierstrass };

inline std::string to_string(FunctionId id) {
    switch (id) {
        case FunctionId::Sphere: return "sphere";
        case FunctionId::Ellipsoid: return "ellipsoid";
        case FunctionId::LinearSlope: return "linear_slope";
        case FunctionId::Rastrigin: return "rastrigin";
        case FunctionId::Weierstrass: return "weierstrass";
    }
    throw UsageError("unknown function id");
}

inline FunctionId function_from_string(const std::string& name) {
    if (name == "sphere") return FunctionId::Sphere;
    if (name == "ellipsoid") return FunctionId::Ellipsoid;
    if (name == "linear_slope") return FunctionId::LinearSlope;
    if (name == "rastrigin") return FunctionId::Rastrigin;
    if (name == "weierstrass") return FunctionId::Weierstrass;
    throw UsageError("unknown function: '" + name + "'");
}

// One concrete benchmark problem: a base function plus a seeded instance
// transform (shift, optional rotation) and box bounds.  Immutable after
// construction; evaluate() is pure and reentrant.
struct ProblemInstance {
    FunctionId function_id = FunctionId::Sphere;
    int dimension = 0;
    std::uint64_t instance_seed = 0;
    Eigen::VectorXd shift;     // optimum location
    Eigen::MatrixXd rotation;  // size 0 means identity
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    bool has_rotation() const { return rotation.size() > 0; }

    std::string id() const {
        return to_string(function_id) + "_d" + std::to_string(dimension) + "_i" +
               std::to_string(instance_seed);
    }
};

namespace detail {

// Random orthogonal matrix: QR of a seeded Gaussian matrix, with column signs
// fixed by the diagonal of R so the factorization is unique.
inline Eigen::MatrixXd random_orthogonal(int d, SplitMix64& rng) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

inline constexpr int kWeierstrassDepth = 12;  // k = 0..11

}  // namespace detail

inline ProblemInstance make_instance(FunctionId fn, int dimension,
                                     std::uint64_t instance_seed) {
    if (dimension < 1) throw UsageError("dimension must be >= 1");
    ProblemInstance inst;
    inst.function_id = fn;
    inst.dimension = dimension;
    inst.instance_seed = instance_seed;
    inst.lower = Eigen::VectorXd::Constant(dimension, -5.0);
    inst.upper = Eigen::VectorXd::Constant(dimension, 5.0);

    SplitMix64 rng(derive_seed(instance_seed, "clustopt.instance." + to_string(fn),
                               static_cast<std::uint64_t>(dimension)));
    inst.shift.resize(dimension);
    if (fn == FunctionId::LinearSlope) {
        // Optimum sits at a corner of the box.
        for (int i = 0; i < dimension; ++i)
            inst.shift(i) = rng.uniform() < 0.5 ? -5.0 : 5.0;
    } else {
        for (int i = 0; i < dimension; ++i) inst.shift(i) = rng.uniform(-4.0, 4.0);
    }
    if (fn == FunctionId::Ellipsoid || fn == FunctionId::Weierstrass)
        inst.rotation = detail::random_orthogonal(dimension, rng);
    return inst;
}

inline double evaluate(const ProblemInstance& inst, const Eigen::VectorXd& x) {
    const int d = inst.dimension;
    if (x.size() != d)
        throw UsageError("evaluate: point has dimension " +
                         std::to_string(x.size()) + ", instance expects " +
                         std::to_string(d));
    if (!x.allFinite()) throw UsageError("evaluate: point has non-finite values");

    if (inst.function_id == FunctionId::LinearSlope) {
        // f(x) = sum_i (5|s_i| - s_i z_i), s_i = sign(o_i) 10^{i/(d-1)},
        // z_i = x_i while o_i x_i < 25, else the corner coordinate o_i.
        double total = 0.0;
        for (int i = 0; i < d; ++i) {
            const double o = inst.shift(i);
            const double expo = d == 1 ? 0.0 : static_cast<double>(i) / (d - 1);
            const double s = (o < 0.0 ? -1.0 : 1.0) * std::pow(10.0, expo);
            const double z = (o * x(i) < 25.0) ? x(i) : o;
            total += 5.0 * std::abs(s) - s * z;
        }
        return total;
    }

    Eigen::VectorXd z = x - inst.shift;
    if (inst.has_rotation()) z = inst.rotation * z;

    switch (inst.function_id) {
        case FunctionId::Sphere:
            return z.squaredNorm();
        case FunctionId::Ellipsoid: {
            double total = 0.0;
            for (int i = 0; i < d; ++i) {
                const double expo = d == 1 ? 0.0 : 6.0 * i / (d - 1);
                total += std::pow(10.0, expo) * z(i) * z(i);
            }
            return total;
        }
        case FunctionId::Rastrigin: {
            double total = 10.0 * d;
            for (int i = 0; i < d; ++i)
                total += z(i) * z(i) -
                         10.0 * std::cos(2.0 * std::numbers::pi * z(i));
            return total;
        }
        case FunctionId::Weierstrass: {
            double pow_half[detail::kWeierstrassDepth];
            double pow_three[detail::kWeierstrassDepth];
            double f0 = 0.0;
            for (int k = 0; k < detail::kWeierstrassDepth; ++k) {
                pow_half[k] = std::pow(0.5, k);
                pow_three[k] = std::pow(3.0, k);
                f0 += pow_half[k] * std::cos(std::numbers::pi * pow_three[k]);
            }
            double total = 0.0;
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < detail::kWeierstrassDepth; ++k)
                    total += pow_half[k] *
                             std::cos(2.0 * std::numbers::pi * pow_three[k] *
                                      (z(i) + 0.5));
            return total - d * f0;
        }
        default:
            throw UsageError("unknown function id");
    }
}

}  // namespace clustopt

#endif
