#pragma once

#include "tkz/apps.hpp"
#include "tkz/config.hpp"
#include "tkz/convex.hpp"
#include "tkz/image.hpp"
#include "tkz/solvers.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tkz {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------- convolution experiments

// Everything the blur experiments share: the operator built at the padded
// size, the stacked true field, its blurred observation, and the blurry
// views cropped back to the reference geometry.
struct ConvolutionSetup {
    std::vector<Image> refs;
    ConvOperator op;
    Tensor3 x_true, b;
    std::vector<Image> blurry;
    std::size_t pad = 0;
    std::size_t kernel_half = 0;
};

namespace detail {

inline Image window(const Image& img, std::size_t r0, std::size_t c0, std::size_t h,
                    std::size_t w) {
    Image out(h, w, img.i_max);
    out.pixels = img.pixels.block(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(c0),
                                  static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
    return out;
}

inline Image roll_cols(const Image& img, std::size_t shift) {
    Image out(img.height, img.width, img.i_max);
    for (std::size_t j = 0; j < img.width; ++j)
        out.pixels.col(static_cast<Eigen::Index>((j + shift) % img.width)) =
            img.pixels.col(static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace detail

inline ConvolutionSetup make_convolution_setup(std::vector<Image> refs, std::size_t kernel_size,
                                               double sigma, std::size_t pad) {
    if (refs.empty()) throw std::invalid_argument("convolution setup: no frames");
    ConvolutionSetup s;
    s.refs = std::move(refs);
    s.pad = pad;
    s.kernel_half = (kernel_size - 1) / 2;
    std::vector<Image> fields;
    const Eigen::Index ph = static_cast<Eigen::Index>(s.refs.front().height + 2 * pad);
    const Eigen::Index pw = static_cast<Eigen::Index>(s.refs.front().width + 2 * pad);
    s.op = kernel_to_tensor(gaussian_kernel(kernel_size, sigma), static_cast<std::size_t>(ph),
                            static_cast<std::size_t>(pw));
    for (const Image& ref : s.refs) {
        Image padded = pad_symmetric(ref, pad);
        Image field(s.op.m, s.op.n, ref.i_max);
        field.pixels.setZero();
        field.pixels.block(0, 0, ph, pw) = padded.pixels;
        fields.push_back(std::move(field));
    }
    s.x_true = frames_to_tensor(fields);
    s.b = tprod(s.op.a, s.x_true);
    for (Image& view : tensor_to_frames(s.b, s.refs.front().i_max))
        s.blurry.push_back(detail::window(view, pad + s.kernel_half, pad + s.kernel_half,
                                          s.refs.front().height, s.refs.front().width));
    return s;
}

// Map a solver iterate back to reference geometry: keep the padded region,
// clamp negatives, strip the padding.
inline std::vector<Image> recovered_frames(const ConvolutionSetup& s, const Tensor3& x) {
    const std::size_t ph = s.refs.front().height + 2 * s.pad;
    const std::size_t pw = s.refs.front().width + 2 * s.pad;
    std::vector<Image> out;
    for (Image& full : tensor_to_frames(x, s.refs.front().i_max))
        out.push_back(crop(clamp_nonneg(detail::window(full, 0, 0, ph, pw)), s.pad));
    return out;
}

// ----------------------------------------------------------- artifact runs

struct RunArtifacts {
    RunConfig config;
    SolveTrace trace;
    nlohmann::json manifest;
    std::string summary;
};

namespace detail {

inline void write_pgm_scaled(const Image& img, const std::string& path) {
    Image out(img.height, img.width, 255.0);
    out.pixels = img.pixels * (255.0 / img.i_max);
    save_pgm(out, path, true);
}

inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline Tensor3 vector_as_tensor(const Eigen::VectorXd& v) {
    Tensor3 t(static_cast<std::size_t>(v.size()), 1, 1);
    for (Eigen::Index i = 0; i < v.size(); ++i) t.at(static_cast<std::size_t>(i), 0, 0) = v[i];
    return t;
}

inline Tensor3 matrix_as_tensor(const Eigen::MatrixXd& m) {
    Tensor3 t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), 1);
    t.slice(0) = m;
    return t;
}

inline void finish_run(RunArtifacts& run, const std::vector<std::pair<std::string, Image>>& images) {
    namespace fs = std::filesystem;
    const fs::path dir(run.config.out_dir);
    fs::create_directories(dir);
    std::ofstream cfg(dir / "config.resolved.cfg");
    if (!cfg) throw std::runtime_error("run: cannot write " + (dir / "config.resolved.cfg").string());
    cfg << run.config.resolved_text();
    run.trace.write_csv((dir / "trace.csv").string());
    nlohmann::json files = nlohmann::json::array({"config.resolved.cfg", "trace.csv", "manifest.json"});
    for (const auto& [name, img] : images) {
        write_pgm_scaled(img, (dir / name).string());
        files.push_back(name);
    }
    run.manifest["family"] = family_name(run.config.family);
    run.manifest["seed"] = run.config.seed;
    run.manifest["stop_reason"] = run.trace.stop_reason;
    run.manifest["wall_seconds"] = run.trace.wall_seconds;
    run.manifest["iterations"] = run.trace.rows.empty() ? 0 : run.trace.rows.back().iter;
    run.manifest["warnings"] = run.trace.warnings;
    run.manifest["files"] = files;
    std::ofstream mf(dir / "manifest.json");
    mf << run.manifest.dump(2) << "\n";
    if (run.trace.stop_reason.rfind("diverged", 0) == 0)
        throw NumericalError("run: " + run.trace.stop_reason);
}

inline SolveTrace dispatch_solve(const RunConfig& cfg, const LinearConstraintSet& cs,
                                 const Regularizer& reg, const SolveConfig& solver) {
    if (cfg.method == "linbreg") return linbreg(cs, reg, solver);
    if (cs.noise) return solve_noisy(cs, reg, cfg.control_sequence(), solver);
    return solve_batched(cs, reg, cfg.control_sequence(), solver);
}

// Per-constraint perturbation with relative magnitude eps against the
// constraint norm, drawn from a stream split off the run seed.
inline Tensor3 relative_noise(const Tensor3& shape_like, const LinearConstraintSet& cs, double eps,
                              std::uint64_t seed) {
    Rng rng(seed ^ 0x517cc1b727220a95ull);
    Tensor3 e(shape_like.n1, shape_like.n2, shape_like.n3);
    for (std::size_t i = 0; i < cs.count(); ++i) {
        double an = 0.0, en = 0.0;
        for (std::size_t k = 0; k < cs.a.n3; ++k)
            for (std::size_t j = 0; j < cs.a.n2; ++j) an += cs.a.at(i, j, k) * cs.a.at(i, j, k);
        std::vector<double> draw(e.n2 * e.n3);
        for (auto& v : draw) {
            v = rng.normal();
            en += v * v;
        }
        const double scale = eps * std::sqrt(an) / std::max(std::sqrt(en), 1e-300);
        std::size_t q = 0;
        for (std::size_t k = 0; k < e.n3; ++k)
            for (std::size_t j = 0; j < e.n2; ++j) e.at(i, j, k) = scale * draw[q++];
    }
    return e;
}

}  // namespace detail

inline RunArtifacts run_sparse(const RunConfig& cfg) {
    SparseProblem p = gen_sparse_problem(cfg.rows, cfg.cols, cfg.sparsity, cfg.seed);
    auto cs = LinearConstraintSet::vector_rows(p.a, p.b);
    SolveConfig solver = cfg.solver_config();
    solver.reference = detail::vector_as_tensor(p.x_hat);
    if (cfg.noise_level > 0.0)
        cs.with_noise(detail::relative_noise(cs.b, cs, cfg.noise_level, cfg.seed));
    RunArtifacts run{cfg, detail::dispatch_solve(cfg, cs, Regularizer::elastic_l1(cfg.lambda), solver),
                     {}, ""};
    const double re = (run.trace.x.slice(0).col(0) - p.x_hat).norm() / p.x_hat.norm();
    run.manifest["metrics"] = {{"rel_err", re},
                               {"residual", run.trace.rows.back().residual},
                               {"epsilon", run.trace.epsilon}};
    run.summary = "sparse " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
                  " s=" + std::to_string(cfg.sparsity) + ": rel_err=" + detail::format_metric(re);
    detail::finish_run(run, {});
    return run;
}

inline RunArtifacts run_inpaint(const RunConfig& cfg) {
    if (cfg.rows != cfg.cols) throw ConfigError("inpaint: board must be square");
    CheckerboardProblem p = gen_checkerboard(cfg.rows, cfg.tile, cfg.box);
    auto cs = LinearConstraintSet::masked_entries(cfg.rows, cfg.cols, p.mask);
    SolveConfig solver = cfg.solver_config();
    solver.reference = detail::matrix_as_tensor(p.image.pixels);
    RunArtifacts run{
        cfg, detail::dispatch_solve(cfg, cs, Regularizer::matrix_nuclear_elastic(cfg.lambda), solver),
        {}, ""};
    Image recovered(cfg.rows, cfg.cols, 1.0);
    recovered.pixels = run.trace.x.slice(0);
    Image observed(cfg.rows, cfg.cols, 1.0);
    observed.pixels.setZero();
    for (const auto& e : p.mask)
        observed.pixels(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.value;
    const double ps = psnr(recovered, p.image);
    run.manifest["metrics"] = {{"psnr", ps},
                               {"ssim", ssim_global(recovered, p.image)},
                               {"observed_entries", p.mask.size()}};
    run.summary = "inpaint " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
                  " |mask|=" + std::to_string(p.mask.size()) + ": psnr=" + detail::format_metric(ps);
    detail::finish_run(run, {{"reference.pgm", p.image},
                             {"observed.pgm", observed},
                             {"recovered.pgm", clamp_nonneg(recovered)}});
    return run;
}

inline RunArtifacts run_tensor(const RunConfig& cfg) {
    TensorProblem p =
        gen_lowrank_tensor_problem(cfg.rows, cfg.cols, cfg.width_k, cfg.depth, cfg.rank, cfg.seed);
    auto cs = LinearConstraintSet::tensor_slices(p.a, p.b);
    SolveConfig solver = cfg.solver_config();
    solver.reference = p.x_hat;
    if (cfg.noise_level > 0.0)
        cs.with_noise(detail::relative_noise(cs.b, cs, cfg.noise_level, cfg.seed));
    RunArtifacts run{
        cfg, detail::dispatch_solve(cfg, cs, Regularizer::tensor_tnn_elastic(cfg.lambda), solver),
        {}, ""};
    Tensor3 diff = run.trace.x;
    for (std::size_t c = 0; c < diff.data.size(); ++c) diff.data[c] -= p.x_hat.data[c];
    const double rel = fro_norm(diff) / fro_norm(p.x_hat);
    run.manifest["metrics"] = {{"rel_err", rel}, {"tubal_rank_true", tubal_rank(p.x_hat)}};
    run.summary = "tensor " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) + "x" +
                  std::to_string(cfg.width_k) + "x" + std::to_string(cfg.depth) +
                  ": rel_err=" + detail::format_metric(rel);
    detail::finish_run(run, {});
    return run;
}

inline RunArtifacts run_deblur(const RunConfig& cfg) {
    if (cfg.rows != cfg.cols) throw ConfigError("deblur: image must be square");
    ConvolutionSetup s =
        make_convolution_setup({house(cfg.rows)}, cfg.kernel_size, cfg.kernel_sigma, cfg.pad);
    auto cs = LinearConstraintSet::tensor_slices(s.op.a, s.b);
    SolveConfig solver = cfg.solver_config();
    solver.reference = s.x_true;
    RunArtifacts run{
        cfg, detail::dispatch_solve(cfg, cs, Regularizer::tensor_tnn_elastic(cfg.lambda), solver),
        {}, ""};
    Image recovered = recovered_frames(s, run.trace.x).front();
    const double ps_blur = psnr(s.blurry.front(), s.refs.front());
    const double ps_rec = psnr(recovered, s.refs.front());
    run.manifest["metrics"] = {
        {"psnr_blurry", ps_blur}, {"psnr_recovered", ps_rec}, {"gain_db", ps_rec - ps_blur}};
    run.summary = "deblur " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
                  ": blurry=" + detail::format_metric(ps_blur) +
                  " recovered=" + detail::format_metric(ps_rec) +
                  " gain=" + detail::format_metric(ps_rec - ps_blur);
    detail::finish_run(run, {{"reference.pgm", s.refs.front()},
                             {"blurry.pgm", s.blurry.front()},
                             {"recovered.pgm", recovered}});
    return run;
}

inline RunArtifacts run_video(const RunConfig& cfg) {
    if (cfg.rows != cfg.cols) throw ConfigError("video: frames must be square");
    std::vector<Image> refs;
    const Image base = house(cfg.rows);
    for (std::size_t q = 0; q < cfg.frames; ++q) refs.push_back(detail::roll_cols(base, 2 * q));
    ConvolutionSetup s = make_convolution_setup(refs, cfg.kernel_size, cfg.kernel_sigma, cfg.pad);
    auto cs = LinearConstraintSet::tensor_slices(s.op.a, s.b);
    SolveConfig solver = cfg.solver_config();
    solver.reference = s.x_true;
    RunArtifacts run{
        cfg, detail::dispatch_solve(cfg, cs, Regularizer::tensor_tnn_elastic(cfg.lambda), solver),
        {}, ""};
    std::vector<Image> recovered = recovered_frames(s, run.trace.x);
    nlohmann::json per_frame = nlohmann::json::array();
    double mean_gain = 0.0;
    std::vector<std::pair<std::string, Image>> images;
    for (std::size_t q = 0; q < cfg.frames; ++q) {
        const double pb = psnr(s.blurry[q], s.refs[q]);
        const double pr = psnr(recovered[q], s.refs[q]);
        per_frame.push_back({{"psnr_blurry", pb}, {"psnr_recovered", pr}});
        mean_gain += (pr - pb) / static_cast<double>(cfg.frames);
        const std::string tag = std::to_string(q);
        images.push_back({"reference_f" + tag + ".pgm", s.refs[q]});
        images.push_back({"blurry_f" + tag + ".pgm", s.blurry[q]});
        images.push_back({"recovered_f" + tag + ".pgm", recovered[q]});
    }
    run.manifest["metrics"] = {{"frames", per_frame}, {"mean_gain_db", mean_gain}};
    run.summary = "video " + std::to_string(cfg.frames) + "x" + std::to_string(cfg.rows) + "x" +
                  std::to_string(cfg.cols) + ": mean_gain=" + detail::format_metric(mean_gain);
    detail::finish_run(run, images);
    return run;
}

inline RunArtifacts run_experiment(const RunConfig& cfg) {
    cfg.to_spec().validate();
    switch (cfg.family) {
        case ExperimentFamily::sparse_vector: return run_sparse(cfg);
        case ExperimentFamily::inpainting: return run_inpaint(cfg);
        case ExperimentFamily::lowrank_tensor: return run_tensor(cfg);
        case ExperimentFamily::deconvolution: return run_deblur(cfg);
        case ExperimentFamily::sequence_deconvolution: return run_video(cfg);
    }
    throw ConfigError("run: unknown family");
}

// ---------------------------------------------------------------- selftest

namespace detail {

struct CheckRow {
    std::string name;
    bool pass = true;
    double max_dev = 0.0;
};

inline void note(CheckRow& row, double dev, double tol) {
    row.max_dev = std::max(row.max_dev, dev);
    if (!(dev <= tol)) row.pass = false;
}

inline double rel_diff(const Tensor3& got, const Tensor3& want) {
    Tensor3 d = got;
    for (std::size_t c = 0; c < d.data.size(); ++c) d.data[c] -= want.data[c];
    return fro_norm(d) / std::max(1.0, fro_norm(want));
}

inline Tensor3 random_tensor(Rng& rng, std::size_t n1, std::size_t n2, std::size_t n3) {
    Tensor3 t(n1, n2, n3);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

}  // namespace detail

// Property sweep over the transform, product, factorization, and conjugate
// machinery on small random instances. Deterministic for a fixed seed. The
// corrupt_fft flag mis-scales the forward transform inside the frequency
// split check, which must then fail (a negative control for the harness).
inline int run_selftest(std::ostream& out, std::uint64_t seed = 1, bool corrupt_fft = false) {
    Rng rng(seed);
    const double tol = 1e-10;
    std::vector<detail::CheckRow> rows;

    detail::CheckRow roundtrip{"transform-roundtrip"};
    detail::CheckRow parseval{"transform-parseval"};
    detail::CheckRow oracle{"product-oracle"};
    detail::CheckRow split{"product-frequency-split"};
    detail::CheckRow adjoint{"adjoint-identity"};
    detail::CheckRow bound{"product-norm-bound"};
    detail::CheckRow additivity{"slice-norm-additivity"};
    detail::CheckRow tsvd_check{"tsvd-reconstruction"};
    detail::CheckRow slice_id{"threshold-slice-identity"};
    detail::CheckRow fenchel{"conjugate-fenchel-equality"};
    detail::CheckRow bregman_check{"bregman-lower-bound"};

    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n1 = 2 + rng.below(5), n2 = 2 + rng.below(5), k = 2 + rng.below(5),
                          n3 = 1 + rng.below(6);
        Tensor3 a = detail::random_tensor(rng, n1, n2, n3);
        Tensor3 x = detail::random_tensor(rng, n2, k, n3);

        Tensor3 back = ifft_tubes(fft_tubes(a));
        detail::note(roundtrip, detail::rel_diff(back, a), tol);

        ComplexTensor3 fa = fft_tubes(a);
        double fnorm2 = 0.0;
        for (const auto& v : fa.data) fnorm2 += std::norm(v);
        detail::note(parseval,
                     std::abs(fnorm2 / static_cast<double>(n3) - fro_norm(a) * fro_norm(a)) /
                         std::max(1.0, fro_norm(a) * fro_norm(a)),
                     tol);

        Tensor3 fast = tprod(a, x);
        detail::note(oracle, detail::rel_diff(fast, tprod_naive(a, x)), tol);

        ComplexTensor3 fx = fft_tubes(x);
        ComplexTensor3 fy = fft_tubes(fast);
        const double scale = corrupt_fft ? 1.0 / static_cast<double>(n3) : 1.0;
        double dev = 0.0, ref = 0.0;
        for (std::size_t j = 0; j < n3; ++j) {
            Eigen::MatrixXcd lhs = fy.slice(j);
            Eigen::MatrixXcd rhs = (scale * fa.slice(j)) * (scale * fx.slice(j));
            dev = std::max(dev, (lhs - rhs).norm());
            ref = std::max(ref, lhs.norm());
        }
        detail::note(split, dev / std::max(1.0, ref), tol);

        Tensor3 y = detail::random_tensor(rng, n1, k, n3);
        detail::note(adjoint,
                     std::abs(inner(fast, y) - inner(x, tprod(transpose_t(a), y))) /
                         std::max(1.0, std::abs(inner(fast, y))),
                     tol);

        const double lhs_norm = fro_norm(fast);
        const double rhs_norm = std::sqrt(static_cast<double>(n3)) * fro_norm(a) * fro_norm(x);
        detail::note(bound, (lhs_norm - rhs_norm) / std::max(1.0, rhs_norm), tol);

        double slices = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            const double s = fro_norm(horizontal_slice(a, i));
            slices += s * s;
        }
        detail::note(additivity, std::abs(slices - fro_norm(a) * fro_norm(a)) /
                                     std::max(1.0, fro_norm(a) * fro_norm(a)),
                     tol);

        TSvd f = tsvd(a);
        Tensor3 rec = tprod(tprod(f.u, f.s), transpose_t(f.v));
        detail::note(tsvd_check, detail::rel_diff(rec, a), tol);

        const double lam = 0.3 + rng.uniform();
        Tensor3 thresholded = stt(a, lam);
        ComplexTensor3 ft = fft_tubes(thresholded);
        ComplexTensor3 faf = fft_tubes(a);
        double sdev = 0.0, sref = 0.0;
        for (std::size_t j = 0; j < n3; ++j) {
            Eigen::MatrixXcd want = svt(Eigen::MatrixXcd(faf.slice(j)), lam);
            sdev = std::max(sdev, (Eigen::MatrixXcd(ft.slice(j)) - want).norm());
            sref = std::max(sref, want.norm() + 1.0);
        }
        detail::note(slice_id, sdev / sref, tol);

        for (const Regularizer& r :
             {Regularizer::squared_fro(), Regularizer::elastic_l1(lam),
              Regularizer::tensor_tnn_elastic(lam)}) {
            Tensor3 z = detail::random_tensor(rng, n2, k, n3);
            Tensor3 g = grad_conj(r, z);
            const double gap = std::abs(inner(z, g) - f_value(r, g) - f_conj_value(r, z));
            detail::note(fenchel, gap / std::max(1.0, std::abs(inner(z, g))), tol);

            Tensor3 w = detail::random_tensor(rng, n2, k, n3);
            Tensor3 d = g;
            for (std::size_t c = 0; c < d.data.size(); ++c) d.data[c] -= w.data[c];
            const double half_dist = 0.5 * fro_norm(d) * fro_norm(d);
            detail::note(bregman_check, (half_dist - bregman(r, z, w)) / std::max(1.0, half_dist),
                         tol);
        }
    }

    rows = {roundtrip, parseval,   oracle,   split,   adjoint,       bound,
            additivity, tsvd_check, slice_id, fenchel, bregman_check};
    out << "selftest seed " << seed << (corrupt_fft ? " (corrupted transform)" : "") << "\n";
    int failures = 0;
    for (const auto& row : rows) {
        char devbuf[32];
        std::snprintf(devbuf, sizeof(devbuf), "%9.1e", row.max_dev);
        out << "  " << row.name;
        for (std::size_t pad = row.name.size(); pad < 28; ++pad) out << ' ';
        out << (row.pass ? "pass" : "FAIL") << "  max_dev" << devbuf << "\n";
        if (!row.pass) ++failures;
    }
    out << "result: " << (rows.size() - static_cast<std::size_t>(failures)) << "/" << rows.size()
        << " checks passed\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace tkz
