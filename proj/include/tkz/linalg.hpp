#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <complex>
#include <stdexcept>
#include <vector>

namespace tkz {

// Economy singular value decomposition with a deterministic sign convention:
// in each left singular vector the entry of largest magnitude (lowest index on
// ties) is rotated to be real and nonnegative, with the inverse phase applied
// to the matching right singular vector.
struct SvdReal {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
    Eigen::MatrixXd v;  // columns are right singular vectors
};

struct SvdComplex {
    Eigen::MatrixXcd u;
    Eigen::VectorXd s;
    Eigen::MatrixXcd v;
};

namespace detail {

inline void apply_sign_convention(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            const double m = std::abs(u(r, c));
            if (m > best + 0.0) {
                best = m;
                imax = r;
            }
        }
        if (u(imax, c) < 0.0) {
            u.col(c) = -u.col(c);
            v.col(c) = -v.col(c);
        }
    }
}

inline void apply_sign_convention(Eigen::MatrixXcd& u, Eigen::MatrixXcd& v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            const double m = std::abs(u(r, c));
            if (m > best) {
                best = m;
                imax = r;
            }
        }
        const std::complex<double> pivot = u(imax, c);
        const double mag = std::abs(pivot);
        if (mag > 0.0) {
            // same factor on both sides keeps u * s * v^H unchanged
            const std::complex<double> factor = std::conj(pivot) / mag;
            u.col(c) *= factor;
            v.col(c) *= factor;
        }
    }
}

}  // namespace detail

inline SvdReal svd(const Eigen::MatrixXd& m) {
    const lapack_int rows = static_cast<lapack_int>(m.rows());
    const lapack_int cols = static_cast<lapack_int>(m.cols());
    if (rows == 0 || cols == 0) throw std::invalid_argument("svd: empty matrix");
    if (!m.allFinite()) throw std::invalid_argument("svd: nonfinite entries");
    const lapack_int k = std::min(rows, cols);
    Eigen::MatrixXd a = m;  // gesdd overwrites its input
    SvdReal r;
    r.u.resize(rows, k);
    r.s.resize(k);
    Eigen::MatrixXd vt(k, cols);
    lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, a.data(), rows,
                                     r.s.data(), r.u.data(), rows, vt.data(), k);
    if (info != 0) {
        // divide-and-conquer can fail to converge on rare inputs; QR-based path is the fallback
        a = m;
        Eigen::VectorXd superb(std::max<lapack_int>(1, k - 1));
        info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', rows, cols, a.data(), rows,
                              r.s.data(), r.u.data(), rows, vt.data(), k, superb.data());
        if (info != 0) throw std::runtime_error("svd: LAPACK did not converge");
    }
    r.v = vt.transpose();
    detail::apply_sign_convention(r.u, r.v);
    return r;
}

inline SvdComplex svd(const Eigen::MatrixXcd& m) {
    const lapack_int rows = static_cast<lapack_int>(m.rows());
    const lapack_int cols = static_cast<lapack_int>(m.cols());
    if (rows == 0 || cols == 0) throw std::invalid_argument("svd: empty matrix");
    if (!m.allFinite()) throw std::invalid_argument("svd: nonfinite entries");
    const lapack_int k = std::min(rows, cols);
    Eigen::MatrixXcd a = m;
    SvdComplex r;
    r.u.resize(rows, k);
    r.s.resize(k);
    Eigen::MatrixXcd vt(k, cols);
    lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols,
                                     reinterpret_cast<lapack_complex_double*>(a.data()), rows,
                                     r.s.data(),
                                     reinterpret_cast<lapack_complex_double*>(r.u.data()), rows,
                                     reinterpret_cast<lapack_complex_double*>(vt.data()), k);
    if (info != 0) {
        a = m;
        Eigen::VectorXd superb(std::max<lapack_int>(1, k - 1));
        info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', rows, cols,
                              reinterpret_cast<lapack_complex_double*>(a.data()), rows,
                              r.s.data(),
                              reinterpret_cast<lapack_complex_double*>(r.u.data()), rows,
                              reinterpret_cast<lapack_complex_double*>(vt.data()), k, superb.data());
        if (info != 0) throw std::runtime_error("svd: LAPACK did not converge");
    }
    r.v = vt.adjoint();
    detail::apply_sign_convention(r.u, r.v);
    return r;
}

// Componentwise shrinkage sgn(x) * max(|x| - lambda, 0).
inline double soft_threshold(double x, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("soft_threshold: negative lambda");
    const double m = std::abs(x) - lambda;
    return m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
}

inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("soft_threshold: negative lambda");
    Eigen::VectorXd r(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = soft_threshold(x[i], lambda);
    return r;
}

// Singular value thresholding U * max(S - lambda, 0) * V^*.
inline Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("svt: negative lambda");
    SvdReal d = svd(m);
    Eigen::VectorXd t = (d.s.array() - lambda).max(0.0);
    return d.u * t.asDiagonal() * d.v.transpose();
}

inline Eigen::MatrixXcd svt(const Eigen::MatrixXcd& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("svt: negative lambda");
    SvdComplex d = svd(m);
    Eigen::VectorXd t = (d.s.array() - lambda).max(0.0);
    return d.u * t.asDiagonal() * d.v.adjoint();
}

// Smallest nonzero and largest singular values; the zero cut is
// max(rows, cols) * eps * sigma_max so rank decisions reproduce.
inline std::pair<double, double> sigma_extremes(const Eigen::MatrixXd& m) {
    if (m.norm() == 0.0) throw std::invalid_argument("sigma_extremes: zero matrix");
    SvdReal d = svd(m);
    const double smax = d.s[0];
    const double cut = static_cast<double>(std::max(m.rows(), m.cols())) *
                       std::numeric_limits<double>::epsilon() * smax;
    double smin = smax;
    for (Eigen::Index i = 0; i < d.s.size(); ++i)
        if (d.s[i] > cut) smin = d.s[i];
    return {smin, smax};
}

inline double nuclear_norm(const Eigen::MatrixXd& m) { return svd(m).s.sum(); }
inline double nuclear_norm(const Eigen::MatrixXcd& m) { return svd(m).s.sum(); }

}  // namespace tkz
