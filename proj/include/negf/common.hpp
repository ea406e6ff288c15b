// common.hpp — shared aliases, error types, and a small parallel map

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace negf {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr cplx kImag{0.0, 1.0};

// Raised when a scenario/config field fails validation; the message names the field.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when the requested mode count would overflow the Fock dimension budget.
struct FockCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a numerical solve fails; the message names the operation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool is_hermitian(const MatrixXcd& m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

inline double max_abs(const MatrixXcd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline cplx expectation(const MatrixXcd& rho, const MatrixXcd& a) { return (rho * a).trace(); }

// Fermi factor 1/(1+e^x), stable for large |x|.
inline double fermi(double x) {
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

inline int env_thread_count() {
    if (const char* s = std::getenv("NEGF_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static-partition parallel loop. Each index is processed exactly once and must
// write to its own slots only, so results do not depend on the thread count.
inline void parallel_for(int count, const std::function<void(int)>& body) {
    const int nt = std::min(env_thread_count(), std::max(1, count));
    if (nt <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += nt) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace negf
