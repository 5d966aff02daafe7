#include "tenseg/numerics.hpp"

#include "tenseg/errors.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace tenseg {

bool is_symmetric(const DenseMatrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    if (a.size() == 0) return true;
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    return asym <= rel_tol * scale;
}

DenseMatrix kron_identity3(const DenseMatrix& a) {
    DenseMatrix out = DenseMatrix::Zero(3 * a.rows(), 3 * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0.0) continue;
            for (int d = 0; d < 3; ++d) out(3 * i + d, 3 * j + d) = a(i, j);
        }
    }
    return out;
}

Vector solve_spd(const DenseMatrix& a, const Vector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw DimensionMismatch("solve_spd: matrix and right-hand side sizes differ");
    }
    if (!is_symmetric(a)) throw ContractViolation("solve_spd: matrix is not symmetric");
    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("solve_spd: non-positive pivot in Cholesky factorization");
    }
    return llt.solve(b);
}

EigenDecomposition sym_eig(const DenseMatrix& a) {
    if (!is_symmetric(a)) throw ContractViolation("sym_eig: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
    if (es.info() != Eigen::Success) throw Error("sym_eig: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

EigenDecomposition gen_sym_eig(const DenseMatrix& k, const DenseMatrix& m) {
    if (k.rows() != k.cols() || m.rows() != m.cols() || k.rows() != m.rows()) {
        throw DimensionMismatch("gen_sym_eig: stiffness and mass sizes differ");
    }
    if (!is_symmetric(k)) throw ContractViolation("gen_sym_eig: stiffness is not symmetric");
    if (!is_symmetric(m)) throw ContractViolation("gen_sym_eig: mass is not symmetric");
    Eigen::LLT<DenseMatrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw MassError("gen_sym_eig: mass matrix is not positive-definite");
    }
    // L^-1 K L^-T, then phi = L^-T y.
    const auto lower = llt.matrixL();
    DenseMatrix reduced = lower.solve(k);
    reduced = lower.solve(reduced.transpose()).transpose();
    reduced = 0.5 * (reduced + reduced.transpose());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(reduced);
    if (es.info() != Eigen::Success) throw Error("gen_sym_eig: eigensolver did not converge");
    DenseMatrix phi = llt.matrixU().solve(es.eigenvectors());
    return {es.eigenvalues(), std::move(phi)};
}

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double tol, int max_iter) {
    if (!(lo < hi)) throw InvalidParameter("minimize_scalar: requires lo < hi");
    ScalarMinimum best{hi, 0.0, 0};
    auto eval = [&](double t) {
        const double v = f(t);
        ++best.evaluations;
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "minimize_scalar: objective is not finite at " << t;
            throw LineSearchError(msg.str(), t);
        }
        if (best.evaluations == 1 || v < best.value) {
            best.argmin = t;
            best.value = v;
        }
        return v;
    };

    static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    eval(hi);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    return best;
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
    const double v = lo + (hi - lo) * uniform01();
    // Rounding in lo + (hi-lo)*u can land exactly on hi.
    return v < hi ? v : std::nextafter(hi, lo);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InvalidParameter("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    Rng mix(master ^ (stream * 0xD1B54A32D192ED03ULL));
    mix.next_u64();
    return mix.next_u64();
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (n <= 0) return;
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    int err_index = n;
    std::exception_ptr err;
    auto run = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                // Keep the lowest failing index so serial and parallel runs report the same error.
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace tenseg
