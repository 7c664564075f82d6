#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tkz {

using cd = std::complex<double>;

// Length-n DFT, any n >= 1. Forward is unnormalized, inverse carries 1/n.
// Power-of-two lengths run an iterative radix-2 transform; other lengths go
// through Bluestein's chirp-z reduction to a power-of-two convolution.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("Fft: n must be positive");
        if (is_pow2(n)) {
            init_pow2(n);
        } else {
            init_bluestein();
        }
    }

    std::size_t size() const { return n_; }

    void forward(cd* x) const {
        if (n_ == 1) return;
        if (bluestein_m_ == 0) {
            pow2_transform(x, n_, tw_fwd_);
        } else {
            bluestein(x, false);
        }
    }

    void inverse(cd* x) const {
        if (n_ == 1) return;
        if (bluestein_m_ == 0) {
            pow2_transform(x, n_, tw_inv_);
        } else {
            bluestein(x, true);
        }
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] *= s;
    }

    void forward(std::vector<cd>& x) const { check(x.size()); forward(x.data()); }
    void inverse(std::vector<cd>& x) const { check(x.size()); inverse(x.data()); }

private:
    static bool is_pow2(std::size_t n) { return (n & (n - 1)) == 0; }

    void check(std::size_t m) const {
        if (m != n_) throw std::invalid_argument("Fft: length mismatch");
    }

    void init_pow2(std::size_t n) {
        tw_fwd_.resize(n / 2);
        tw_inv_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            tw_fwd_[k] = cd(std::cos(ang), std::sin(ang));
            tw_inv_[k] = std::conj(tw_fwd_[k]);
        }
    }

    // In-place iterative Cooley-Tukey, n a power of two, twiddles for the full length.
    static void pow2_transform(cd* x, std::size_t n, const std::vector<cd>& tw) {
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(x[i], x[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t stride = n / len;
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    const cd w = tw[k * stride];
                    const cd u = x[i + k];
                    const cd v = x[i + k + len / 2] * w;
                    x[i + k] = u + v;
                    x[i + k + len / 2] = u - v;
                }
            }
        }
    }

    void init_bluestein() {
        std::size_t m = 1;
        while (m < 2 * n_ - 1) m <<= 1;
        bluestein_m_ = m;
        init_pow2(m);
        // chirp_k = exp(-i*pi*k^2/n); k^2 is reduced mod 2n, the chirp's period.
        chirp_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t k2 = (k * k) % (2 * n_);
            const double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n_);
            chirp_[k] = cd(std::cos(ang), std::sin(ang));
        }
        // Spectrum of the conjugate chirp laid out circularly over [0, m).
        bspec_.assign(m, cd(0.0, 0.0));
        for (std::size_t k = 0; k < n_; ++k) {
            bspec_[k] = std::conj(chirp_[k]);
            if (k > 0) bspec_[m - k] = std::conj(chirp_[k]);
        }
        pow2_transform(bspec_.data(), m, tw_fwd_);
    }

    void bluestein(cd* x, bool inv) const {
        const std::size_t m = bluestein_m_;
        std::vector<cd> a(m, cd(0.0, 0.0));
        if (inv) {
            for (std::size_t k = 0; k < n_; ++k) a[k] = std::conj(x[k]) * chirp_[k];
        } else {
            for (std::size_t k = 0; k < n_; ++k) a[k] = x[k] * chirp_[k];
        }
        pow2_transform(a.data(), m, tw_fwd_);
        for (std::size_t k = 0; k < m; ++k) a[k] *= bspec_[k];
        pow2_transform(a.data(), m, tw_inv_);
        const double s = 1.0 / static_cast<double>(m);
        if (inv) {
            for (std::size_t k = 0; k < n_; ++k) x[k] = std::conj(a[k] * s * chirp_[k]);
        } else {
            for (std::size_t k = 0; k < n_; ++k) x[k] = a[k] * s * chirp_[k];
        }
    }

    std::size_t n_;
    std::size_t bluestein_m_ = 0;
    std::vector<cd> tw_fwd_, tw_inv_;
    std::vector<cd> chirp_, bspec_;
};

}  // namespace tkz
