#pragma once

#include "tkz/convex.hpp"
#include "tkz/image.hpp"
#include "tkz/rng.hpp"
#include "tkz/solvers.hpp"
#include "tkz/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tkz {

// ------------------------------------------------------------- generators

struct SparseProblem {
    Eigen::MatrixXd a;
    Eigen::VectorXd x_hat, b;
};

// Gaussian sensing matrix, uniformly drawn support, nonzeros from N(1, 1).
inline SparseProblem gen_sparse_problem(std::size_t m, std::size_t n, std::size_t s,
                                        std::uint64_t seed) {
    if (s > n) throw std::invalid_argument("gen_sparse_problem: sparsity exceeds dimension");
    Rng rng(seed);
    SparseProblem p;
    p.a.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
    p.x_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<std::size_t> order = rng.permutation(n);
    for (std::size_t k = 0; k < s; ++k)
        p.x_hat[static_cast<Eigen::Index>(order[k])] = rng.normal(1.0, 1.0);
    p.b = p.a * p.x_hat;
    return p;
}

struct Box {
    std::size_t row = 0, col = 0, height = 0, width = 0;
};

struct CheckerboardProblem {
    Image image;                     // full two-level board, intensities {0, 1}
    std::vector<MaskedEntry> mask;   // observed entries: everything outside the box
};

// Two-level board (a rank-2 matrix) with a rectangular unobserved area.
inline CheckerboardProblem gen_checkerboard(std::size_t size, std::size_t tile, const Box& box) {
    if (size == 0 || tile == 0 || size % tile != 0)
        throw std::invalid_argument("gen_checkerboard: tile must divide size");
    if (box.row + box.height > size || box.col + box.width > size)
        throw std::invalid_argument("gen_checkerboard: box out of bounds");
    CheckerboardProblem p;
    p.image = Image(size, size, 1.0);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j)
            p.image.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<double>((i / tile + j / tile) % 2);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const bool inside = i >= box.row && i < box.row + box.height && j >= box.col &&
                                j < box.col + box.width;
            if (!inside)
                p.mask.push_back({i, j,
                                  p.image.pixels(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j))});
        }
    return p;
}

struct TensorProblem {
    Tensor3 a, x_hat, b;
};

// Gaussian operator against a Gaussian unknown truncated to tubal rank r.
inline TensorProblem gen_lowrank_tensor_problem(std::size_t n1, std::size_t n2, std::size_t k,
                                                std::size_t n3, std::size_t r, std::uint64_t seed) {
    if (r > std::min(n2, k))
        throw std::invalid_argument("gen_lowrank_tensor_problem: rank out of range");
    Rng rng(seed);
    TensorProblem p{Tensor3(n1, n2, n3), Tensor3(n2, k, n3), Tensor3(n1, k, n3)};
    for (auto& v : p.a.data) v = rng.normal();
    for (auto& v : p.x_hat.data) v = rng.normal();
    p.x_hat = truncate_tubal_rank(p.x_hat, r);
    p.b = tprod(p.a, p.x_hat);
    return p;
}

// --------------------------------------------- convolution as a t-product

struct ConvOperator {
    Tensor3 a;           // n x n x m
    std::size_t m, n;    // padded working dims
};

// Build the operator whose t-product action on the tensorized image equals
// circular 2D convolution at the padded size m = m1+m2-1, n = n1+n2-1:
// frontal slice i is circ(row i of the zero-padded kernel).
inline ConvOperator kernel_to_tensor(const Eigen::MatrixXd& kernel, std::size_t m1,
                                     std::size_t n1) {
    const std::size_t m2 = static_cast<std::size_t>(kernel.rows());
    const std::size_t n2 = static_cast<std::size_t>(kernel.cols());
    const std::size_t m = m1 + m2 - 1;
    const std::size_t n = n1 + n2 - 1;
    ConvOperator op{Tensor3(n, n, m), m, n};
    for (std::size_t i = 0; i < m2; ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n2; ++j) row[static_cast<Eigen::Index>(j)] = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        op.a.slice(i) = circ(row);
    }
    return op;
}

// Lay an m x n image into an n x 1 x m tensor: T(j, 0, i) = X(i, j).
inline Tensor3 image_to_tensor(const Image& img) {
    Tensor3 t(img.width, 1, img.height);
    for (std::size_t i = 0; i < img.height; ++i)
        for (std::size_t j = 0; j < img.width; ++j)
            t.at(j, 0, i) = img.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return t;
}

inline Image tensor_to_image(const Tensor3& t, double i_max) {
    if (t.n2 != 1) throw std::invalid_argument("tensor_to_image: middle dimension must be 1");
    Image img(t.n3, t.n1, i_max);
    for (std::size_t i = 0; i < t.n3; ++i)
        for (std::size_t j = 0; j < t.n1; ++j)
            img.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(j, 0, i);
    return img;
}

// Multi-frame variant: p same-width frames share mode 2, T(j, q, i) = X_q(i, j).
inline Tensor3 frames_to_tensor(const std::vector<Image>& frames) {
    if (frames.empty()) throw std::invalid_argument("frames_to_tensor: no frames");
    const std::size_t h = frames.front().height, w = frames.front().width;
    Tensor3 t(w, frames.size(), h);
    for (std::size_t q = 0; q < frames.size(); ++q) {
        if (frames[q].height != h || frames[q].width != w)
            throw std::invalid_argument("frames_to_tensor: frame dims disagree");
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
                t.at(j, q, i) = frames[q].pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    return t;
}

inline std::vector<Image> tensor_to_frames(const Tensor3& t, double i_max) {
    std::vector<Image> frames;
    for (std::size_t q = 0; q < t.n2; ++q) {
        Image img(t.n3, t.n1, i_max);
        for (std::size_t i = 0; i < t.n3; ++i)
            for (std::size_t j = 0; j < t.n1; ++j)
                img.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(j, q, i);
        frames.push_back(std::move(img));
    }
    return frames;
}

// ------------------------------------------------------ padding and crops

namespace detail {

// Edge-inclusive reflection: offsets -1, -2, ... map to 0, 1, ...
inline std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
    const std::ptrdiff_t period = 2 * static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t r = i % period;
    if (r < 0) r += period;
    if (r >= static_cast<std::ptrdiff_t>(n)) r = period - 1 - r;
    return static_cast<std::size_t>(r);
}

}  // namespace detail

inline Image pad_symmetric(const Image& img, std::size_t p) {
    if (p >= std::min(img.height, img.width))
        throw std::invalid_argument("pad_symmetric: padding too large");
    Image out(img.height + 2 * p, img.width + 2 * p, img.i_max);
    for (std::size_t r = 0; r < out.height; ++r)
        for (std::size_t c = 0; c < out.width; ++c) {
            const std::size_t sr = detail::mirror_index(
                static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(p), img.height);
            const std::size_t sc = detail::mirror_index(
                static_cast<std::ptrdiff_t>(c) - static_cast<std::ptrdiff_t>(p), img.width);
            out.pixels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                img.pixels(static_cast<Eigen::Index>(sr), static_cast<Eigen::Index>(sc));
        }
    return out;
}

inline Image crop(const Image& img, std::size_t p) {
    if (2 * p >= std::min(img.height, img.width))
        throw std::invalid_argument("crop: margin too large");
    Image out(img.height - 2 * p, img.width - 2 * p, img.i_max);
    out.pixels = img.pixels.block(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p),
                                  static_cast<Eigen::Index>(out.height),
                                  static_cast<Eigen::Index>(out.width));
    return out;
}

// ------------------------------------------------------- kernels and data

inline Eigen::MatrixXd gaussian_kernel(std::size_t size, double sigma) {
    if (size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd");
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    const double c = (static_cast<double>(size) - 1.0) / 2.0;
    Eigen::MatrixXd h(size, size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double dy = static_cast<double>(i) - c, dx = static_cast<double>(j) - c;
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    return h / h.sum();
}

// Synthetic piecewise-constant test scene in [0, 1]: background, body, roof
// triangle, window, door. Geometry is expressed on a 64-cell grid and scales.
inline Image house(std::size_t size = 64) {
    if (size < 16) throw std::invalid_argument("house: size too small");
    const double f = static_cast<double>(size) / 64.0;
    auto s = [f](double v) { return static_cast<Eigen::Index>(v * f); };
    Image img(size, size, 1.0);
    img.pixels.setConstant(0.15);
    img.pixels.block(s(28), s(14), s(56) - s(28), s(50) - s(14)).setConstant(0.75);
    for (Eigen::Index r = s(12); r < s(28); ++r) {
        const double u = static_cast<double>(r) / f;
        const Eigen::Index w = static_cast<Eigen::Index>((u - 11.0) / 16.0 * 22.0 * f);
        const Eigen::Index lo = std::max<Eigen::Index>(0, s(32) - w);
        const Eigen::Index hi = std::min<Eigen::Index>(static_cast<Eigen::Index>(size), s(32) + w);
        if (hi > lo) img.pixels.block(r, lo, 1, hi - lo).setConstant(0.45);
    }
    img.pixels.block(s(36), s(20), s(48) - s(36), s(28) - s(20)).setConstant(0.95);
    img.pixels.block(s(40), s(38), s(56) - s(40), s(46) - s(38)).setConstant(0.05);
    return img;
}

// ---------------------------------------------------------- problem specs

enum class ExperimentFamily {
    sparse_vector,
    inpainting,
    lowrank_tensor,
    deconvolution,
    sequence_deconvolution
};

struct ExperimentSpec {
    ExperimentFamily family = ExperimentFamily::sparse_vector;
    std::size_t rows = 0, cols = 0;       // ambient dims (m, n / board size)
    std::size_t depth = 1, width_k = 1;   // tensor dims n3 and k
    std::size_t sparsity = 0;
    std::size_t rank = 0;
    std::size_t tile = 16;
    Box box;
    std::size_t kernel_size = 9;
    double kernel_sigma = 2.0;
    std::size_t pad = 14;
    std::size_t frames = 1;
    double noise_level = 0.0;
    double lambda = 0.0;
    SolveConfig solver;
    std::uint64_t seed = 0;

    void validate() const {
        if (rows == 0 || cols == 0 || depth == 0 || width_k == 0)
            throw std::invalid_argument("ExperimentSpec: dimensions must be positive");
        if (sparsity > cols) throw std::invalid_argument("ExperimentSpec: sparsity exceeds dimension");
        if (kernel_size % 2 == 0) throw std::invalid_argument("ExperimentSpec: kernel dims must be odd");
    }
};

}  // namespace tkz
