#pragma once

#include "tkz/fft.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tkz {

// Dense third-order tensor. Layout is frontal-slice-major with column-major
// slices: element (i,j,k) sits at data[k*n1*n2 + j*n1 + i], 0-based. The
// layout is fixed so serialized bytes and traces reproduce across runs.
struct Tensor3 {
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(std::size_t a, std::size_t b, std::size_t c)
        : n1(a), n2(b), n3(c), data(a * b * c, 0.0) {
        if (a == 0 || b == 0 || c == 0) throw std::invalid_argument("Tensor3: dims must be positive");
    }

    double& at(std::size_t i, std::size_t j, std::size_t k) { return data[k * n1 * n2 + j * n1 + i]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return data[k * n1 * n2 + j * n1 + i]; }

    Eigen::Map<Eigen::MatrixXd> slice(std::size_t k) {
        return Eigen::Map<Eigen::MatrixXd>(data.data() + k * n1 * n2, n1, n2);
    }
    Eigen::Map<const Eigen::MatrixXd> slice(std::size_t k) const {
        return Eigen::Map<const Eigen::MatrixXd>(data.data() + k * n1 * n2, n1, n2);
    }

    bool same_dims(const Tensor3& o) const { return n1 == o.n1 && n2 == o.n2 && n3 == o.n3; }
};

struct ComplexTensor3 {
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    std::vector<cd> data;

    ComplexTensor3() = default;
    ComplexTensor3(std::size_t a, std::size_t b, std::size_t c)
        : n1(a), n2(b), n3(c), data(a * b * c, cd(0.0, 0.0)) {
        if (a == 0 || b == 0 || c == 0) throw std::invalid_argument("ComplexTensor3: dims must be positive");
    }

    cd& at(std::size_t i, std::size_t j, std::size_t k) { return data[k * n1 * n2 + j * n1 + i]; }
    cd at(std::size_t i, std::size_t j, std::size_t k) const { return data[k * n1 * n2 + j * n1 + i]; }

    Eigen::Map<Eigen::MatrixXcd> slice(std::size_t k) {
        return Eigen::Map<Eigen::MatrixXcd>(data.data() + k * n1 * n2, n1, n2);
    }
    Eigen::Map<const Eigen::MatrixXcd> slice(std::size_t k) const {
        return Eigen::Map<const Eigen::MatrixXcd>(data.data() + k * n1 * n2, n1, n2);
    }
};

inline double inner(const Tensor3& a, const Tensor3& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double fro_norm(const Tensor3& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double fro_norm(const ComplexTensor3& a) {
    double s = 0.0;
    for (const cd& v : a.data) s += std::norm(v);
    return std::sqrt(s);
}

// Circulant matrix with first column v; column q is v cyclically shifted down q times.
inline Eigen::MatrixXd circ(const Eigen::VectorXd& v) {
    const std::size_t n = static_cast<std::size_t>(v.size());
    Eigen::MatrixXd m(n, n);
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t p = 0; p < n; ++p) m(p, q) = v[(p + n - q) % n];
    return m;
}

// Block circulant matrix: block (p,q) is frontal slice (p-q) mod n3.
inline Eigen::MatrixXd bcirc(const Tensor3& a) {
    Eigen::MatrixXd m(a.n1 * a.n3, a.n2 * a.n3);
    for (std::size_t p = 0; p < a.n3; ++p)
        for (std::size_t q = 0; q < a.n3; ++q)
            m.block(p * a.n1, q * a.n2, a.n1, a.n2) = a.slice((p + a.n3 - q) % a.n3);
    return m;
}

inline Eigen::MatrixXd unfold(const Tensor3& a) {
    Eigen::MatrixXd m(a.n1 * a.n3, a.n2);
    for (std::size_t k = 0; k < a.n3; ++k) m.block(k * a.n1, 0, a.n1, a.n2) = a.slice(k);
    return m;
}

inline Tensor3 fold(const Eigen::MatrixXd& m, std::size_t n1, std::size_t n3) {
    if (n1 * n3 != static_cast<std::size_t>(m.rows()))
        throw std::invalid_argument("fold: rows not divisible into n3 slices of height n1");
    Tensor3 a(n1, static_cast<std::size_t>(m.cols()), n3);
    for (std::size_t k = 0; k < n3; ++k) a.slice(k) = m.block(k * n1, 0, n1, m.cols());
    return a;
}

// Drops length-one dimensions down to a matrix. 1 x n2 x n3 -> n2 x n3,
// n1 x 1 x n3 -> n1 x n3, n1 x n2 x 1 -> n1 x n2.
inline Eigen::MatrixXd squeeze_matrix(const Tensor3& a) {
    if (a.n1 == 1) {
        Eigen::MatrixXd m(a.n2, a.n3);
        for (std::size_t k = 0; k < a.n3; ++k)
            for (std::size_t j = 0; j < a.n2; ++j) m(j, k) = a.at(0, j, k);
        return m;
    }
    if (a.n2 == 1) {
        Eigen::MatrixXd m(a.n1, a.n3);
        for (std::size_t k = 0; k < a.n3; ++k)
            for (std::size_t i = 0; i < a.n1; ++i) m(i, k) = a.at(i, 0, k);
        return m;
    }
    if (a.n3 == 1) return a.slice(0);
    throw std::invalid_argument("squeeze_matrix: no unit dimension");
}

// Two unit dimensions down to a vector (tube or column).
inline Eigen::VectorXd squeeze_vector(const Tensor3& a) {
    if (a.n1 == 1 && a.n2 == 1) {
        Eigen::VectorXd v(a.n3);
        for (std::size_t k = 0; k < a.n3; ++k) v[k] = a.at(0, 0, k);
        return v;
    }
    if (a.n2 == 1 && a.n3 == 1) {
        Eigen::VectorXd v(a.n1);
        for (std::size_t i = 0; i < a.n1; ++i) v[i] = a.at(i, 0, 0);
        return v;
    }
    if (a.n1 == 1 && a.n3 == 1) {
        Eigen::VectorXd v(a.n2);
        for (std::size_t j = 0; j < a.n2; ++j) v[j] = a.at(0, j, 0);
        return v;
    }
    throw std::invalid_argument("squeeze_vector: need two unit dimensions");
}

// Transpose every frontal slice, keep slice 0 first, reverse the order of the rest.
inline Tensor3 transpose_t(const Tensor3& a) {
    Tensor3 r(a.n2, a.n1, a.n3);
    r.slice(0) = a.slice(0).transpose();
    for (std::size_t k = 1; k < a.n3; ++k) r.slice(k) = a.slice(a.n3 - k).transpose();
    return r;
}

inline Tensor3 identity_tensor(std::size_t n, std::size_t n3) {
    Tensor3 e(n, n, n3);
    e.slice(0) = Eigen::MatrixXd::Identity(n, n);
    return e;
}

// Reference t-product through the materialized block circulant; test oracle
// and small-size fallback only (the matrix is n1*n3 x n2*n3).
inline Tensor3 tprod_naive(const Tensor3& a, const Tensor3& c) {
    if (a.n2 != c.n1 || a.n3 != c.n3) throw std::invalid_argument("tprod: dimension mismatch");
    return fold(bcirc(a) * unfold(c), a.n1, a.n3);
}

inline ComplexTensor3 fft_tubes(const Tensor3& a) {
    ComplexTensor3 f(a.n1, a.n2, a.n3);
    Fft plan(a.n3);
    const std::size_t stride = a.n1 * a.n2;
    std::vector<cd> tube(a.n3);
    for (std::size_t j = 0; j < a.n2; ++j)
        for (std::size_t i = 0; i < a.n1; ++i) {
            const std::size_t base = j * a.n1 + i;
            for (std::size_t k = 0; k < a.n3; ++k) tube[k] = cd(a.data[base + k * stride], 0.0);
            plan.forward(tube);
            for (std::size_t k = 0; k < a.n3; ++k) f.data[base + k * stride] = tube[k];
        }
    return f;
}

// Inverse tube transform of data assumed to come from a real tensor; an
// imaginary residue above 1e-8 * max(1, ||result||) signals a broken
// conjugate-symmetry invariant and is an error, not something to drop.
inline Tensor3 ifft_tubes(const ComplexTensor3& f) {
    Tensor3 a(f.n1, f.n2, f.n3);
    Fft plan(f.n3);
    const std::size_t stride = f.n1 * f.n2;
    std::vector<cd> tube(f.n3);
    double imag_sq = 0.0, real_sq = 0.0;
    for (std::size_t j = 0; j < f.n2; ++j)
        for (std::size_t i = 0; i < f.n1; ++i) {
            const std::size_t base = j * f.n1 + i;
            for (std::size_t k = 0; k < f.n3; ++k) tube[k] = f.data[base + k * stride];
            plan.inverse(tube);
            for (std::size_t k = 0; k < f.n3; ++k) {
                a.data[base + k * stride] = tube[k].real();
                real_sq += tube[k].real() * tube[k].real();
                imag_sq += tube[k].imag() * tube[k].imag();
            }
        }
    const double scale = std::max(1.0, std::sqrt(real_sq));
    if (std::sqrt(imag_sq) > 1e-8 * scale)
        throw std::runtime_error("ifft_tubes: imaginary residue exceeds tolerance");
    return a;
}

// Number of Fourier frequencies that determine a real tensor's tube spectrum.
inline std::size_t half_spectrum_count(std::size_t n3) { return n3 / 2 + 1; }

// Fast t-product: per-frequency complex products. Conjugate symmetry of real
// inputs means only the first half_spectrum_count(n3) frequencies are
// multiplied; the rest are conjugate mirrors.
inline Tensor3 tprod(const Tensor3& a, const Tensor3& c) {
    if (a.n2 != c.n1 || a.n3 != c.n3) throw std::invalid_argument("tprod: dimension mismatch");
    const std::size_t n3 = a.n3;
    ComplexTensor3 fa = fft_tubes(a);
    ComplexTensor3 fc = fft_tubes(c);
    ComplexTensor3 fr(a.n1, c.n2, n3);
    const std::size_t h = half_spectrum_count(n3);
    for (std::size_t k = 0; k < h; ++k) fr.slice(k) = fa.slice(k) * fc.slice(k);
    for (std::size_t k = h; k < n3; ++k) fr.slice(k) = fr.slice(n3 - k).conjugate();
    return ifft_tubes(fr);
}

inline Tensor3 horizontal_slice(const Tensor3& a, std::size_t i) {
    if (i >= a.n1) throw std::out_of_range("horizontal_slice: index out of range");
    Tensor3 r(1, a.n2, a.n3);
    for (std::size_t k = 0; k < a.n3; ++k)
        for (std::size_t j = 0; j < a.n2; ++j) r.at(0, j, k) = a.at(i, j, k);
    return r;
}

// --- serialization ------------------------------------------------------

// Binary format: magic "TKZ1", three little-endian uint64 dims, then the data
// array as little-endian IEEE-754 doubles in the documented layout.
inline void save_tkz1(const Tensor3& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_tkz1: cannot open " + path);
    out.write("TKZ1", 4);
    const std::uint64_t dims[3] = {a.n1, a.n2, a.n3};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_tkz1: write failed for " + path);
}

inline Tensor3 load_tkz1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_tkz1: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "TKZ1")
        throw std::runtime_error("load_tkz1: bad magic in " + path);
    std::uint64_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw std::runtime_error("load_tkz1: truncated header in " + path);
    Tensor3 a(dims[0], dims[1], dims[2]);
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_tkz1: truncated data in " + path);
    return a;
}

// Text fixture format: first line "n1 n2 n3", then whitespace-separated
// values in layout order.
inline Tensor3 load_text_tensor(std::istream& in) {
    std::size_t n1, n2, n3;
    if (!(in >> n1 >> n2 >> n3)) throw std::runtime_error("load_text_tensor: bad dims line");
    Tensor3 a(n1, n2, n3);
    for (auto& v : a.data)
        if (!(in >> v)) throw std::runtime_error("load_text_tensor: not enough values");
    return a;
}

inline Tensor3 load_text_tensor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_text_tensor: cannot open " + path);
    return load_text_tensor(in);
}

}  // namespace tkz
