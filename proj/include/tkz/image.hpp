#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tkz {

struct Image {
    std::size_t height = 0, width = 0;
    Eigen::MatrixXd pixels;  // height x width
    double i_max = 255.0;

    Image() = default;
    Image(std::size_t h, std::size_t w, double imax = 255.0)
        : height(h), width(w), pixels(Eigen::MatrixXd::Zero(h, w)), i_max(imax) {
        if (h == 0 || w == 0) throw std::invalid_argument("Image: zero dimension");
        if (imax <= 0.0) throw std::invalid_argument("Image: nonpositive dynamic range");
    }

    bool same_dims(const Image& o) const { return height == o.height && width == o.width; }
};

inline Image clamp_nonneg(Image img) {
    img.pixels = img.pixels.cwiseMax(0.0);
    return img;
}

// ----------------------------------------------------------------- metrics

// 20 log10(i_max / ||x - ref||_F) with no pixel-count normalization; equal
// images return the 300 dB sentinel instead of infinity.
inline double psnr(const Image& x, const Image& ref) {
    if (!x.same_dims(ref)) throw std::invalid_argument("psnr: dimension mismatch");
    const double d = (x.pixels - ref.pixels).norm();
    if (d == 0.0) return 300.0;
    return 20.0 * std::log10(ref.i_max / d);
}

inline double relerr(const Image& x, const Image& ref) {
    if (!x.same_dims(ref)) throw std::invalid_argument("relerr: dimension mismatch");
    const double rn = ref.pixels.norm();
    if (rn == 0.0) throw std::invalid_argument("relerr: zero reference");
    return (x.pixels - ref.pixels).norm() / rn;
}

// Single-window structural similarity from whole-image statistics.
inline double ssim_global(const Image& x, const Image& ref) {
    if (!x.same_dims(ref)) throw std::invalid_argument("ssim_global: dimension mismatch");
    const double n = static_cast<double>(x.height * x.width);
    const double mx = x.pixels.mean();
    const double my = ref.pixels.mean();
    const double vx = (x.pixels.array() - mx).square().sum() / n;
    const double vy = (ref.pixels.array() - my).square().sum() / n;
    const double cov = ((x.pixels.array() - mx) * (ref.pixels.array() - my)).sum() / n;
    const double c1 = 0.01 * ref.i_max * 0.01 * ref.i_max;
    const double c2 = 0.03 * ref.i_max * 0.03 * ref.i_max;
    return (2.0 * mx * my + c1) * (2.0 * cov + c2) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
}

// ------------------------------------------------------------------ pgm io

namespace detail {

inline int pgm_next_int(std::istream& in) {
    // Skip whitespace and # comments between header tokens.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("pgm: malformed header or sample");
    return value;
}

}  // namespace detail

inline void save_pgm(const Image& img, std::ostream& out, bool binary = true) {
    const long maxval = std::lround(img.i_max);
    if (maxval < 1 || maxval > 65535) throw std::invalid_argument("save_pgm: i_max out of range");
    out << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    const bool wide = maxval > 255;
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            const double v = img.pixels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (!std::isfinite(v)) throw std::invalid_argument("save_pgm: nonfinite intensity");
            long q = std::lround(v);
            q = std::max(0L, std::min(maxval, q));
            if (binary) {
                if (wide) out.put(static_cast<char>((q >> 8) & 0xff));
                out.put(static_cast<char>(q & 0xff));
            } else {
                out << q << (c + 1 == img.width ? '\n' : ' ');
            }
        }
    }
    if (!out) throw std::runtime_error("save_pgm: write failure");
}

inline void save_pgm(const Image& img, const std::string& path, bool binary = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_pgm: cannot open " + path);
    save_pgm(img, out, binary);
}

inline Image load_pgm(std::istream& in) {
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw std::runtime_error("pgm: unsupported magic");
    const int w = detail::pgm_next_int(in);
    const int h = detail::pgm_next_int(in);
    const int maxval = detail::pgm_next_int(in);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("pgm: bad dimensions or depth");
    Image img(static_cast<std::size_t>(h), static_cast<std::size_t>(w), static_cast<double>(maxval));
    if (magic == "P2") {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int v = detail::pgm_next_int(in);
                if (v < 0 || v > maxval) throw std::runtime_error("pgm: sample out of range");
                img.pixels(r, c) = v;
            }
    } else {
        in.get();  // single whitespace after maxval
        const bool wide = maxval > 255;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int v = in.get();
                if (v == EOF) throw std::runtime_error("pgm: truncated data");
                if (wide) {
                    const int lo = in.get();
                    if (lo == EOF) throw std::runtime_error("pgm: truncated data");
                    v = (v << 8) | lo;
                }
                if (v > maxval) throw std::runtime_error("pgm: sample out of range");
                img.pixels(r, c) = v;
            }
    }
    return img;
}

inline Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_pgm: cannot open " + path);
    return load_pgm(in);
}

}  // namespace tkz
