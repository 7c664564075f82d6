#pragma once

#include "tkz/linalg.hpp"
#include "tkz/tensor.hpp"

#include <stdexcept>

namespace tkz {

// The four strongly convex objectives driving the iterations. All have
// strong-convexity constant alpha_f = 1 (each contains a full 1/2||.||^2 term).
enum class RegKind { squared_fro, elastic_l1, matrix_nuclear_elastic, tensor_tnn_elastic };

struct Regularizer {
    RegKind kind = RegKind::squared_fro;
    double lambda = 0.0;
    double alpha_f = 1.0;

    static Regularizer squared_fro() { return {RegKind::squared_fro, 0.0, 1.0}; }
    static Regularizer elastic_l1(double lambda) {
        require_nonneg(lambda);
        return {RegKind::elastic_l1, lambda, 1.0};
    }
    static Regularizer matrix_nuclear_elastic(double lambda) {
        require_nonneg(lambda);
        return {RegKind::matrix_nuclear_elastic, lambda, 1.0};
    }
    static Regularizer tensor_tnn_elastic(double lambda) {
        require_nonneg(lambda);
        return {RegKind::tensor_tnn_elastic, lambda, 1.0};
    }

private:
    static void require_nonneg(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("Regularizer: lambda must be nonnegative");
    }
};

// Tensor nuclear norm: sum of nuclear norms of the Fourier frontal slices,
// under the unnormalized forward tube transform. Conjugate-symmetric
// frequencies contribute equal nuclear norms, so only half are decomposed.
inline double tnn(const Tensor3& x) {
    ComplexTensor3 f = fft_tubes(x);
    const std::size_t h = half_spectrum_count(x.n3);
    double total = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
        const bool mirrored = (k != 0) && !(x.n3 % 2 == 0 && k == x.n3 / 2);
        total += (mirrored ? 2.0 : 1.0) * nuclear_norm(Eigen::MatrixXcd(f.slice(k)));
    }
    return total;
}

struct TSvd {
    Tensor3 u;  // n1 x m x n3
    Tensor3 s;  // m x m x n3, diagonal in every Fourier slice
    Tensor3 v;  // n2 x m x n3
};

// Per-frequency complex SVDs assembled back through the inverse tube
// transform; x = u * s * transpose_t(v) up to floating error.
inline TSvd tsvd(const Tensor3& x) {
    const std::size_t m = std::min(x.n1, x.n2);
    ComplexTensor3 f = fft_tubes(x);
    ComplexTensor3 fu(x.n1, m, x.n3), fs(m, m, x.n3), fv(x.n2, m, x.n3);
    const std::size_t h = half_spectrum_count(x.n3);
    for (std::size_t k = 0; k < h; ++k) {
        SvdComplex d = svd(Eigen::MatrixXcd(f.slice(k)));
        fu.slice(k) = d.u;
        fs.slice(k) = d.s.asDiagonal();
        fv.slice(k) = d.v;
    }
    for (std::size_t k = h; k < x.n3; ++k) {
        fu.slice(k) = fu.slice(x.n3 - k).conjugate();
        fs.slice(k) = fs.slice(x.n3 - k).conjugate();
        fv.slice(k) = fv.slice(x.n3 - k).conjugate();
    }
    return {ifft_tubes(fu), ifft_tubes(fs), ifft_tubes(fv)};
}

// Largest per-frequency rank; zero cut scales with the largest singular
// value across all frequencies.
inline std::size_t tubal_rank(const Tensor3& x) {
    ComplexTensor3 f = fft_tubes(x);
    const std::size_t h = half_spectrum_count(x.n3);
    std::vector<Eigen::VectorXd> spectra;
    double smax = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
        spectra.push_back(svd(Eigen::MatrixXcd(f.slice(k))).s);
        if (spectra.back().size() > 0) smax = std::max(smax, spectra.back()[0]);
    }
    const double cut = static_cast<double>(std::max(x.n1, x.n2)) *
                       std::numeric_limits<double>::epsilon() * smax;
    std::size_t rank = 0;
    for (const auto& s : spectra) {
        std::size_t r = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s[i] > cut) ++r;
        rank = std::max(rank, r);
    }
    return rank;
}

// Keep the r largest singular values in every Fourier slice, zero the rest.
inline Tensor3 truncate_tubal_rank(const Tensor3& x, std::size_t r) {
    if (r > std::min(x.n1, x.n2)) throw std::invalid_argument("truncate_tubal_rank: r out of range");
    if (r == std::min(x.n1, x.n2)) return x;
    ComplexTensor3 f = fft_tubes(x);
    const std::size_t h = half_spectrum_count(x.n3);
    for (std::size_t k = 0; k < h; ++k) {
        SvdComplex d = svd(Eigen::MatrixXcd(f.slice(k)));
        Eigen::VectorXd s = d.s;
        for (Eigen::Index i = static_cast<Eigen::Index>(r); i < s.size(); ++i) s[i] = 0.0;
        f.slice(k) = d.u * s.asDiagonal() * d.v.adjoint();
    }
    for (std::size_t k = h; k < x.n3; ++k) f.slice(k) = f.slice(x.n3 - k).conjugate();
    return ifft_tubes(f);
}

// Singular tube thresholding: soft-threshold the singular values of every
// Fourier frontal slice by tau, then transform back.
inline Tensor3 stt(const Tensor3& x, double tau) {
    if (tau < 0.0) throw std::invalid_argument("stt: negative tau");
    if (tau == 0.0) return x;
    ComplexTensor3 f = fft_tubes(x);
    const std::size_t h = half_spectrum_count(x.n3);
    for (std::size_t k = 0; k < h; ++k) f.slice(k) = svt(Eigen::MatrixXcd(f.slice(k)), tau);
    for (std::size_t k = h; k < x.n3; ++k) f.slice(k) = f.slice(x.n3 - k).conjugate();
    return ifft_tubes(f);
}

namespace detail {

inline double abs_sum(const Tensor3& x) {
    double s = 0.0;
    for (double v : x.data) s += std::abs(v);
    return s;
}

inline void require_matrix_shape(const Tensor3& x) {
    if (x.n3 != 1) throw std::invalid_argument("regularizer: matrix kind requires n3 = 1");
}

}  // namespace detail

// f(x). The tensor kind weights its nuclear-norm term by 1/n3: under the
// unnormalized forward tube transform this is the weighting for which the
// conjugate gradient thresholds Fourier singular values by exactly lambda.
inline double f_value(const Regularizer& r, const Tensor3& x) {
    const double q = 0.5 * inner(x, x);
    switch (r.kind) {
        case RegKind::squared_fro:
            return q;
        case RegKind::elastic_l1:
            return q + r.lambda * detail::abs_sum(x);
        case RegKind::matrix_nuclear_elastic:
            detail::require_matrix_shape(x);
            return q + r.lambda * nuclear_norm(Eigen::MatrixXd(x.slice(0)));
        case RegKind::tensor_tnn_elastic:
            return q + r.lambda / static_cast<double>(x.n3) * tnn(x);
    }
    throw std::logic_error("f_value: unreachable");
}

// grad f* = prox of the non-quadratic part; the map applied after every dual update.
inline Tensor3 grad_conj(const Regularizer& r, const Tensor3& z) {
    switch (r.kind) {
        case RegKind::squared_fro:
            return z;
        case RegKind::elastic_l1: {
            Tensor3 x = z;
            for (auto& v : x.data) v = soft_threshold(v, r.lambda);
            return x;
        }
        case RegKind::matrix_nuclear_elastic: {
            detail::require_matrix_shape(z);
            Tensor3 x = z;
            x.slice(0) = svt(Eigen::MatrixXd(z.slice(0)), r.lambda);
            return x;
        }
        case RegKind::tensor_tnn_elastic:
            return stt(z, r.lambda);
    }
    throw std::logic_error("grad_conj: unreachable");
}

// f*(z) through the subgradient identity f(x) + f*(z) = <z, x> at x = grad f*(z);
// exact for these objectives, no numeric sup needed.
inline double f_conj_value(const Regularizer& r, const Tensor3& z) {
    Tensor3 x = grad_conj(r, z);
    return inner(z, x) - f_value(r, x);
}

// Bregman distance D(x, y) with x = grad f*(z) and z the subgradient at x.
inline double bregman(const Regularizer& r, const Tensor3& z, const Tensor3& y) {
    if (!z.same_dims(y)) throw std::invalid_argument("bregman: dimension mismatch");
    return f_value(r, y) + f_conj_value(r, z) - inner(z, y);
}

// --- per-frequency closed forms used by the Fourier-domain solver path ----

// Matrix elastic objective value 1/2||M||^2 + lambda ||M||_* on one slice.
inline double melastic_value(const Eigen::MatrixXcd& m, double lambda) {
    const double q = 0.5 * m.squaredNorm();
    return lambda == 0.0 ? q : q + lambda * nuclear_norm(m);
}

// Its convex conjugate 1/2 sum((sigma_i(W) - lambda)_+)^2.
inline double melastic_conj_value(const Eigen::MatrixXcd& w, double lambda) {
    if (lambda == 0.0) return 0.5 * w.squaredNorm();
    Eigen::VectorXd s = svd(w).s;
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double t = s[i] - lambda;
        if (t > 0.0) total += 0.5 * t * t;
    }
    return total;
}

}  // namespace tkz
