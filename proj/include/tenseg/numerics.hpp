#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace tenseg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EigenDecomposition {
    Vector values;        // ascending
    DenseMatrix vectors;  // column i pairs with values[i]
};

struct ScalarMinimum {
    double argmin = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// True when `a` is square and max|A - A^T| <= rel_tol * max|A|.
bool is_symmetric(const DenseMatrix& a, double rel_tol = 1e-12);

/// A kron I_3.
DenseMatrix kron_identity3(const DenseMatrix& a);

/// Solves A x = b for symmetric positive-definite A by Cholesky factorization.
/// Throws NotPositiveDefinite when a pivot is non-positive.
Vector solve_spd(const DenseMatrix& a, const Vector& b);

/// Full spectrum of a symmetric matrix, eigenvalues ascending, eigenvectors orthonormal.
EigenDecomposition sym_eig(const DenseMatrix& a);

/// Solves K phi = lambda M phi for symmetric K and SPD M by reducing with the
/// Cholesky factor of M. Eigenvectors are M-orthonormal. Throws MassError when
/// M is not positive-definite.
EigenDecomposition gen_sym_eig(const DenseMatrix& k, const DenseMatrix& m);

/// Golden-section search for a minimizer of f on [lo, hi]. The returned point is
/// the best one evaluated and always lies inside the interval. Throws
/// LineSearchError if f yields a non-finite value.
ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double tol = 1e-8, int max_iter = 100);

/// SplitMix64 stream. The state update is pure 64-bit integer arithmetic, so a
/// given seed reproduces the same sequence on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    /// lo + (hi - lo) * u with u in [0, 1).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed_state() const { return state_; }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from a master seed and a stream label.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is handled
/// by exactly one worker; results must be written to per-index slots.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace tenseg
