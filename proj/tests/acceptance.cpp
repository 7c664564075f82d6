#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "tkz/apps.hpp"
#include "tkz/config.hpp"
#include "tkz/convex.hpp"
#include "tkz/experiments.hpp"
#include "tkz/image.hpp"
#include "tkz/rng.hpp"
#include "tkz/solvers.hpp"
#include "tkz/tensor.hpp"

using tkz::ControlSequence;
using tkz::LinearConstraintSet;
using tkz::Regularizer;
using tkz::Rng;
using tkz::SolveConfig;
using tkz::SolveTrace;
using tkz::Tensor3;

namespace {

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

Tensor3 random_tensor(Rng& rng, std::size_t n1, std::size_t n2, std::size_t n3) {
    Tensor3 t(n1, n2, n3);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

double rel_diff(const Tensor3& got, const Tensor3& want) {
    Tensor3 d = got;
    for (std::size_t c = 0; c < d.data.size(); ++c) d.data[c] -= want.data[c];
    return tkz::fro_norm(d) / std::max(1.0, tkz::fro_norm(want));
}

// Criterion 1: the transform-based product agrees with the block-circulant
// definition on 200 random conformable instances.
bool crit1(std::string& detail) {
    constexpr double tol = 1e-10;
    const auto start = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n1 = 1 + rng.below(8), n2 = 1 + rng.below(8), k = 1 + rng.below(8),
                          n3 = 1 + rng.below(8);
        Tensor3 a = random_tensor(rng, n1, n2, n3);
        Tensor3 c = random_tensor(rng, n2, k, n3);
        worst = std::max(worst, rel_diff(tkz::tprod(a, c), tkz::tprod_naive(a, c)));
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = fmt(
        "fast product vs naive product on 200 instances: max rel dev %.2e (tol %.0e), "
        "runtime %.2f s (< 5)",
        worst, tol, wall);
    return worst <= tol && wall < 5.0;
}

// Criterion 2: adjoint identity, norm bound, per-frequency factorization,
// slice-norm additivity, and the slice-wise threshold identity, 100 random
// instances each.
bool crit2(std::string& detail) {
    constexpr double tol = 1e-10;
    Rng rng(102);
    double adjoint = 0.0, bound = 0.0, split = 0.0, additivity = 0.0, threshold = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n1 = 2 + rng.below(5), n2 = 2 + rng.below(5), k = 2 + rng.below(5),
                          n3 = 1 + rng.below(6);
        Tensor3 a = random_tensor(rng, n1, n2, n3);
        Tensor3 x = random_tensor(rng, n2, k, n3);
        Tensor3 y = random_tensor(rng, n1, k, n3);
        Tensor3 ax = tkz::tprod(a, x);

        const double lhs = tkz::inner(ax, y);
        const double rhs = tkz::inner(x, tkz::tprod(tkz::transpose_t(a), y));
        adjoint = std::max(adjoint, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));

        const double cap = std::sqrt(static_cast<double>(n3)) * tkz::fro_norm(a) * tkz::fro_norm(x);
        bound = std::max(bound, (tkz::fro_norm(ax) - cap) / std::max(1.0, cap));

        tkz::ComplexTensor3 fa = tkz::fft_tubes(a), fx = tkz::fft_tubes(x),
                            fy = tkz::fft_tubes(ax);
        for (std::size_t j = 0; j < n3; ++j) {
            const Eigen::MatrixXcd want = fa.slice(j) * fx.slice(j);
            split = std::max(split, (Eigen::MatrixXcd(fy.slice(j)) - want).norm() /
                                        std::max(1.0, want.norm()));
        }

        double slices = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            const double s = tkz::fro_norm(tkz::horizontal_slice(a, i));
            slices += s * s;
        }
        const double total = tkz::fro_norm(a) * tkz::fro_norm(a);
        additivity = std::max(additivity, std::abs(slices - total) / std::max(1.0, total));

        const double lam = 0.2 + rng.uniform();
        tkz::ComplexTensor3 ft = tkz::fft_tubes(tkz::stt(a, lam));
        for (std::size_t j = 0; j < n3; ++j) {
            const Eigen::MatrixXcd want = tkz::svt(Eigen::MatrixXcd(fa.slice(j)), lam);
            threshold = std::max(threshold, (Eigen::MatrixXcd(ft.slice(j)) - want).norm() /
                                                std::max(1.0, want.norm()));
        }
    }
    const double worst = std::max({adjoint, bound, split, additivity, threshold});
    detail = fmt(
        "100 instances each: adjoint %.1e, norm bound %.1e, frequency split %.1e, slice "
        "additivity %.1e, threshold identity %.1e (tol %.0e)",
        adjoint, bound, split, additivity, threshold, tol);
    return worst <= tol;
}

struct DescentRun {
    SolveTrace trace;
    Tensor3 a, x_hat, b;
    Regularizer reg = Regularizer::squared_fro();
    double t = 0.0;
};

DescentRun descent_run() {
    DescentRun r;
    tkz::TensorProblem p = tkz::gen_lowrank_tensor_problem(60, 20, 20, 20, 2, 31);
    r.a = p.a;
    r.x_hat = p.x_hat;
    r.b = p.b;
    r.reg = Regularizer::tensor_tnn_elastic(1.0);
    r.t = 0.05;
    SolveConfig cfg;
    cfg.step_t = r.t;
    cfg.max_iters = 2000;
    cfg.trace_every = 1;
    cfg.reference = p.x_hat;
    r.trace = tkz::solve_batched(LinearConstraintSet::tensor_slices(p.a, p.b), r.reg,
                                 ControlSequence::cyclic(), cfg);
    return r;
}

// Criterion 3: with a feasible reference, the recorded Bregman distance is
// nonincreasing along the whole run.
bool crit3(std::string& detail) {
    constexpr double slack = 1e-12;
    DescentRun r = descent_run();
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i)
        worst_rise = std::max(worst_rise, r.trace.rows[i].bregman - r.trace.rows[i - 1].bregman);
    detail = fmt(
        "60x20x20x20 rank-2 run, t=0.05, 2000 steps: worst single-step rise %.2e (slack %.0e), "
        "distance %.3e -> %.3e",
        worst_rise, slack, r.trace.rows.front().bregman, r.trace.rows.back().bregman);
    return worst_rise <= slack;
}

// Criterion 4: every step decreases the Bregman distance by at least
// t(1 - t n3/2) residual^2 / slice_norm^2, up to relative roundoff slack.
bool crit4(std::string& detail) {
    tkz::TensorProblem p = tkz::gen_lowrank_tensor_problem(60, 20, 20, 20, 2, 31);
    const Regularizer reg = Regularizer::tensor_tnn_elastic(1.0);
    const double t = 0.05;
    const double n3 = 20.0;
    const double factor = t * (1.0 - t * n3 / 2.0);

    std::vector<double> an2(60);
    for (std::size_t i = 0; i < 60; ++i) {
        const double s = tkz::fro_norm(tkz::horizontal_slice(p.a, i));
        an2[i] = s * s;
    }

    Tensor3 z(20, 20, 20), x(20, 20, 20);
    double worst_short = -std::numeric_limits<double>::infinity();
    double prev = tkz::bregman(reg, z, p.x_hat);
    for (std::size_t step = 0; step < 2000; ++step) {
        const std::size_t i = step % 60;
        Tensor3 ai = tkz::horizontal_slice(p.a, i);
        Tensor3 resid = tkz::tprod(ai, x);
        for (std::size_t c = 0; c < resid.data.size(); ++c)
            resid.data[c] = tkz::horizontal_slice(p.b, i).data[c] - resid.data[c];
        Tensor3 update = tkz::tprod(tkz::transpose_t(ai), resid);
        for (std::size_t c = 0; c < z.data.size(); ++c)
            z.data[c] += (t / an2[i]) * update.data[c];
        x = tkz::grad_conj(reg, z);

        const double rn = tkz::fro_norm(resid);
        const double floor = factor * rn * rn / an2[i];
        const double cur = tkz::bregman(reg, z, p.x_hat);
        const double decrease = prev - cur;
        worst_short = std::max(worst_short, floor - decrease - 1e-10 * std::max(1.0, floor));
        prev = cur;
    }
    detail = fmt(
        "same configuration, explicit sweep: worst bound shortfall %.2e after roundoff "
        "slack 1e-10 (<= 0 passes)",
        worst_short);
    return worst_short <= 0.0;
}

// Criterion 5: norm-weighted random control on a consistent full-column-rank
// system decays linearly in expectation; the fitted slope must reach 80% of
// the guaranteed rate and the mean log error must actually be affine.
bool crit5(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(11);
    Eigen::MatrixXd a(50, 20);
    for (Eigen::Index c = 0; c < a.size(); ++c) a.data()[c] = rng.normal();
    Eigen::VectorXd x_hat(20);
    for (Eigen::Index c = 0; c < 20; ++c) x_hat[c] = rng.normal();
    const Eigen::VectorXd b = a * x_hat;

    Tensor3 ref(20, 1, 1);
    for (std::size_t c = 0; c < 20; ++c) ref.at(c, 0, 0) = x_hat[static_cast<Eigen::Index>(c)];

    const std::size_t steps = 2000;
    std::vector<double> iters, mean_log;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        SolveConfig cfg;
        cfg.step_t = 1.0;
        cfg.max_iters = steps;
        cfg.trace_every = 1;
        cfg.reference = ref;
        SolveTrace tr = tkz::solve(LinearConstraintSet::vector_rows(a, b),
                                   Regularizer::squared_fro(),
                                   ControlSequence::weighted_random(seed), cfg);
        if (iters.empty()) {
            iters.resize(tr.rows.size());
            mean_log.assign(tr.rows.size(), 0.0);
            for (std::size_t k = 0; k < tr.rows.size(); ++k)
                iters[k] = static_cast<double>(tr.rows[k].iter);
        }
        for (std::size_t k = 0; k < tr.rows.size(); ++k) {
            const double e2 = std::max(tr.rows[k].rel_err * tr.rows[k].rel_err, 1e-300);
            mean_log[k] += std::log(e2) / 50.0;
        }
    }

    double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0, syy = 0.0;
    const double n = static_cast<double>(iters.size());
    for (std::size_t k = 0; k < iters.size(); ++k) {
        sk += iters[k];
        sy += mean_log[k];
        skk += iters[k] * iters[k];
        sky += iters[k] * mean_log[k];
        syy += mean_log[k] * mean_log[k];
    }
    const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
    const double r2 = (n * sky - sk * sy) * (n * sky - sk * sy) /
                      ((n * skk - sk * sk) * (n * syy - sy * sy));

    const auto [smin, smax] = tkz::sigma_extremes(a);
    const double rate_bound = 0.8 * std::log(1.0 - smin * smin / a.squaredNorm());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = fmt(
        "50 seeds x 2000 weighted random steps: slope %.4f vs 0.8x guaranteed %.4f, R^2 %.4f "
        "(>= 0.95), runtime %.1f s (< 30)",
        slope, rate_bound, r2, wall);
    return slope <= rate_bound && r2 >= 0.95 && wall < 30.0;
}

// Criterion 6: soft-threshold recovery of a 10-sparse signal at full scale,
// and the single-row method needs fewer full passes to reach 1e-2 than the
// full-gradient iteration at its pinned step.
bool crit6(std::string& detail) {
    tkz::SparseProblem p = tkz::gen_sparse_problem(200, 1000, 10, 1);
    auto cs = LinearConstraintSet::vector_rows(p.a, p.b);
    Tensor3 ref(1000, 1, 1);
    for (std::size_t c = 0; c < 1000; ++c) ref.at(c, 0, 0) = p.x_hat[static_cast<Eigen::Index>(c)];
    const Regularizer reg = Regularizer::elastic_l1(5.0);

    SolveConfig cfg;
    cfg.step_t = 40.0;
    cfg.max_iters = 5000;
    cfg.trace_every = 100;
    cfg.reference = ref;
    SolveTrace rk = tkz::solve(cs, reg, ControlSequence::cyclic(), cfg);

    auto first_step_below = [](const SolveTrace& tr, double cut) {
        for (const auto& row : tr.rows)
            if (row.rel_err <= cut) return static_cast<double>(row.iter);
        return std::numeric_limits<double>::infinity();
    };
    const double steps_1e3 = first_step_below(rk, 1e-3);
    const double rk_passes = first_step_below(rk, 1e-2) / 200.0;

    SolveConfig lb_cfg;
    lb_cfg.step_t = 20.0;
    lb_cfg.max_iters = 400;
    lb_cfg.trace_every = 1;
    lb_cfg.reference = ref;
    SolveTrace lb = tkz::linbreg(cs, reg, lb_cfg);
    const double lb_passes = first_step_below(lb, 1e-2);

    const std::string lb_text =
        std::isinf(lb_passes) ? "never (" + lb.stop_reason + ")" : fmt("%.0f", lb_passes);
    detail = fmt(
        "200x1000, 10-sparse, lambda=5, t=40 cyclic: rel_err 1e-3 at step %.0f (budget 2e5); "
        "passes to 1e-2: single-row %.2f vs full-gradient t=20 %s",
        steps_1e3, rk_passes, lb_text.c_str());
    return steps_1e3 <= 2e5 && rk_passes < lb_passes;
}

// Criterion 7: checkerboard completion at the shipped observation pattern.
// The missing block spans entire tile rows and columns of the board; the
// nuclear-norm model then prefers a strictly cheaper non-completing minimum,
// so both pinned targets are unreachable at this geometry. The suite runs
// the pinned parameters and reports the measured values.
bool crit7(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    tkz::CheckerboardProblem p = tkz::gen_checkerboard(128, 16, {24, 12, 80, 104});
    auto cs = LinearConstraintSet::masked_entries(128, 128, p.mask);
    const Regularizer reg = Regularizer::matrix_nuclear_elastic(1500.0);

    SolveConfig cfg;
    cfg.step_t = 9.0;
    cfg.batch_size = 2000;
    cfg.max_iters = 800;
    cfg.trace_every = 200;
    SolveTrace batched = tkz::solve_batched(cs, reg, ControlSequence::cyclic(), cfg);
    tkz::Image rec(128, 128, 1.0);
    rec.pixels = batched.x.slice(0);
    const double psnr_batched = tkz::psnr(rec, p.image);

    SolveConfig lb_cfg;
    lb_cfg.step_t = 1.0;
    lb_cfg.max_iters = 1200;
    lb_cfg.trace_every = 300;
    SolveTrace lb = tkz::linbreg(cs, reg, lb_cfg);
    tkz::Image rec_lb(128, 128, 1.0);
    rec_lb.pixels = lb.x.slice(0);
    const double psnr_lb = tkz::psnr(rec_lb, p.image);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = fmt(
        "|observed|=%zu, lambda=1500: batched t=9 psnr %.2f dB (target >= 70), full-gradient "
        "t=1 psnr %.2f dB (target 35..50), runtime %.1f s (< 10); the missing 80x104 block "
        "makes the completing board cost more than the observed-only minimum at every lambda",
        p.mask.size(), psnr_batched, psnr_lb, wall);
    return psnr_batched >= 70.0 && psnr_lb >= 35.0 && psnr_lb <= 50.0 && wall < 10.0;
}

// Criterion 8: full-scale low tubal rank recovery; cyclic order converges at
// least as well as the uniform random mean, and both traces decrease.
bool crit8(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    tkz::TensorProblem p = tkz::gen_lowrank_tensor_problem(200, 100, 100, 100, 2, 21);
    auto cs = LinearConstraintSet::tensor_slices(p.a, p.b);
    const Regularizer reg = Regularizer::tensor_tnn_elastic(0.0);

    SolveConfig cfg;
    cfg.step_t = 1.0;
    cfg.max_iters = 2000;
    cfg.trace_every = 100;
    cfg.reference = p.x_hat;
    cfg.safety = tkz::SafetyMode::off;

    SolveTrace cyclic = tkz::solve(cs, reg, ControlSequence::cyclic(), cfg);
    auto monotone = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[i - 1] + 1e-12 * std::max(1.0, v[i - 1])) return false;
        return true;
    };
    std::vector<double> cyc;
    for (const auto& row : cyclic.rows) cyc.push_back(row.rel_err);

    std::vector<double> mean(cyc.size(), 0.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SolveTrace tr = tkz::solve(cs, reg, ControlSequence::uniform_random(seed), cfg);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += tr.rows[i].rel_err / 10.0;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = fmt(
        "200x100x100x100 rank 2, 2000 steps: cyclic final rel_err %.2e vs uniform 10-seed mean "
        "%.2e, cyclic %s, randomized mean %s, runtime %.0f s (< 120)",
        cyc.back(), mean.back(), monotone(cyc) ? "monotone" : "NOT monotone",
        monotone(mean) ? "monotone" : "NOT monotone", wall);
    return monotone(cyc) && monotone(mean) && cyc.back() <= mean.back() && wall < 120.0;
}

// Criterion 9: with per-row relative noise at eps and the same noise doubled,
// the plateau error scales linearly: the median ratio sits in [1.5, 3].
bool crit9(std::string& detail) {
    Rng rng(5);
    Eigen::MatrixXd a(80, 30);
    for (Eigen::Index c = 0; c < a.size(); ++c) a.data()[c] = rng.normal();
    Eigen::VectorXd x_hat(30);
    for (Eigen::Index c = 0; c < 30; ++c) x_hat[c] = rng.normal();
    const Eigen::VectorXd b = a * x_hat;
    Tensor3 ref(30, 1, 1);
    for (std::size_t c = 0; c < 30; ++c) ref.at(c, 0, 0) = x_hat[static_cast<Eigen::Index>(c)];

    const double eps = 1e-3;
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng noise_rng(seed * 7919);
        Tensor3 e1(80, 1, 1);
        for (std::size_t i = 0; i < 80; ++i) {
            const double sign = noise_rng.normal() >= 0.0 ? 1.0 : -1.0;
            e1.at(i, 0, 0) = eps * a.row(static_cast<Eigen::Index>(i)).norm() * sign;
        }
        Tensor3 e2 = e1;
        for (auto& v : e2.data) v *= 2.0;

        auto plateau = [&](const Tensor3& noise) {
            auto cs = LinearConstraintSet::vector_rows(a, b);
            cs.with_noise(noise);
            SolveConfig cfg;
            cfg.step_t = 1.0;
            cfg.max_iters = 4000;
            cfg.trace_every = 1;
            cfg.reference = ref;
            SolveTrace tr = tkz::solve_noisy(cs, Regularizer::squared_fro(),
                                             ControlSequence::weighted_random(seed), cfg);
            double acc = 0.0;
            for (std::size_t i = tr.rows.size() - 1000; i < tr.rows.size(); ++i)
                acc += tr.rows[i].rel_err;
            return acc / 1000.0;
        };
        ratios.push_back(plateau(e2) / plateau(e1));
    }
    std::sort(ratios.begin(), ratios.end());
    const double median = 0.5 * (ratios[24] + ratios[25]);
    detail = fmt(
        "80x30, eps=1e-3 vs 2 eps (same direction), 50 seeds, plateau = mean of last 1000 of "
        "4000 steps: median ratio %.3f (accept 1.5..3), range [%.2f, %.2f]",
        median, ratios.front(), ratios.back());
    return median >= 1.5 && median <= 3.0;
}

// Criterion 10: the convolution operator matches a direct circular
// convolution, and the image recovery gains at least 3 dB over its blurry
// input within 1000 rounds.
bool crit10(std::string& detail) {
    constexpr double tol = 1e-10;
    Rng rng(107);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m2 = 1 + rng.below(6), n2 = 1 + rng.below(6);
        const std::size_t m1 = 4 + rng.below(9), n1 = 4 + rng.below(9);
        Eigen::MatrixXd kernel(m2, n2);
        for (Eigen::Index c = 0; c < kernel.size(); ++c) kernel.data()[c] = rng.normal();
        tkz::ConvOperator op = tkz::kernel_to_tensor(kernel, m1, n1);
        tkz::Image padded(op.m, op.n, 1.0);
        for (std::size_t i = 0; i < m1; ++i)
            for (std::size_t j = 0; j < n1; ++j)
                padded.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    rng.normal();
        tkz::Image got = tkz::tensor_to_image(tkz::tprod(op.a, tkz::image_to_tensor(padded)), 1.0);
        Eigen::MatrixXd want = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.m),
                                                     static_cast<Eigen::Index>(op.n));
        for (std::size_t i = 0; i < op.m; ++i)
            for (std::size_t j = 0; j < op.n; ++j) {
                double acc = 0.0;
                for (std::size_t u = 0; u < m2; ++u)
                    for (std::size_t v = 0; v < n2; ++v)
                        acc += kernel(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) *
                               padded.pixels(
                                   static_cast<Eigen::Index>((i + op.m - u) % op.m),
                                   static_cast<Eigen::Index>((j + op.n - v) % op.n));
                want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
            }
        worst = std::max(worst, (got.pixels - want).norm() / std::max(1.0, want.norm()));
    }

    tkz::ConvolutionSetup s = tkz::make_convolution_setup({tkz::house(64)}, 9, 2.0, 14);
    SolveConfig cfg;
    cfg.step_t = 1.0;
    cfg.batch_size = 80;
    cfg.max_iters = 1000;
    cfg.trace_every = 1000;
    cfg.row_normalize = false;
    cfg.safety = tkz::SafetyMode::off;
    SolveTrace tr = tkz::solve_batched(LinearConstraintSet::tensor_slices(s.op.a, s.b),
                                       Regularizer::tensor_tnn_elastic(0.1),
                                       ControlSequence::cyclic(), cfg);
    const double ps_blur = tkz::psnr(s.blurry.front(), s.refs.front());
    const double ps_rec = tkz::psnr(tkz::recovered_frames(s, tr.x).front(), s.refs.front());
    detail = fmt(
        "operator vs direct convolution on 50 instances: max rel dev %.2e (tol %.0e); 64x64 "
        "recovery at 1000 rounds: blurry %.2f dB, recovered %.2f dB, gain %.2f (>= 3)",
        worst, tol, ps_blur, ps_rec, ps_rec - ps_blur);
    return worst <= tol && ps_rec >= ps_blur + 3.0;
}

// Criterion 11: the step-quality constant matches brute-force enumeration
// over constraints and frequencies, and stays positive inside the step range
// for depth >= 2. At depth 1 every slice has a single frequency with share 1
// and the constant degenerates to the closed form t(1-t), checked exactly.
bool crit11(std::string& detail) {
    constexpr double tol = 1e-12;
    Rng rng(111);
    double worst = 0.0;
    double min_beta = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n1 = 1 + rng.below(5), n2 = 1 + rng.below(4), n3 = 2 + rng.below(5);
        Tensor3 a = random_tensor(rng, n1, n2, n3);
        const double t = (0.05 + 0.9 * rng.uniform()) * 2.0 / static_cast<double>(n3);
        const double got = tkz::compute_beta(a, t);

        double want = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n1; ++i) {
            double total = 0.0;
            std::vector<double> freq(n3, 0.0);
            for (std::size_t j = 0; j < n3; ++j) {
                for (std::size_t q = 0; q < n2; ++q) {
                    std::complex<double> acc(0.0, 0.0);
                    for (std::size_t k = 0; k < n3; ++k) {
                        const double ang = -2.0 * std::numbers::pi * static_cast<double>(j * k) /
                                           static_cast<double>(n3);
                        acc += a.at(i, q, k) * std::complex<double>(std::cos(ang), std::sin(ang));
                    }
                    freq[j] += std::norm(acc);
                }
                total += freq[j];
            }
            for (std::size_t j = 0; j < n3; ++j) {
                const double share = freq[j] / total;
                if (share < 1e-24) continue;
                want = std::min(want, t * share * (1.0 - t * share));
            }
        }
        worst = std::max(worst, std::abs(got - want));
        min_beta = std::min(min_beta, got);
    }

    double flat_dev = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        Tensor3 a = random_tensor(rng, 1 + rng.below(5), 1 + rng.below(4), 1);
        const double t = 0.1 + 1.8 * rng.uniform();
        flat_dev = std::max(flat_dev, std::abs(tkz::compute_beta(a, t) - t * (1.0 - t)));
    }

    detail = fmt(
        "50 random tensors depth 2..6, steps inside (0, 2/n3): max |fast - enumerated| %.2e "
        "(tol %.0e), min value %.2e (> 0); depth-1 closed form t(1-t) dev %.2e",
        worst, tol, min_beta, flat_dev);
    return worst <= tol && min_beta > 0.0 && flat_dev <= tol;
}

// Criterion 12: identical config and seed reproduce the trace byte for byte.
bool crit12(std::string& detail) {
    namespace fs = std::filesystem;
    auto read_bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    auto rerun = [&](tkz::RunConfig cfg, const char* tag) {
        const fs::path base = fs::temp_directory_path() / "tkz_acceptance";
        cfg.out_dir = (base / (std::string(tag) + "_a")).string();
        fs::remove_all(cfg.out_dir);
        tkz::run_experiment(cfg);
        tkz::RunConfig again = cfg;
        again.out_dir = (base / (std::string(tag) + "_b")).string();
        fs::remove_all(again.out_dir);
        tkz::run_experiment(again);
        const std::string first = read_bytes(fs::path(cfg.out_dir) / "trace.csv");
        return !first.empty() && first == read_bytes(fs::path(again.out_dir) / "trace.csv");
    };

    tkz::RunConfig sparse = tkz::RunConfig::defaults_for(tkz::ExperimentFamily::sparse_vector);
    sparse.rows = 30;
    sparse.cols = 80;
    sparse.sparsity = 4;
    sparse.step_t = 5.0;
    sparse.max_iters = 400;
    sparse.control = "uniform";
    sparse.seed = 9;
    const bool sparse_ok = rerun(sparse, "sparse");

    tkz::RunConfig video = tkz::RunConfig::defaults_for(tkz::ExperimentFamily::sequence_deconvolution);
    video.max_iters = 100;
    video.seed = 9;
    const bool video_ok = rerun(video, "video");

    detail = fmt("sparse rerun %s, video rerun %s (trace bytes compared)",
                 sparse_ok ? "identical" : "DIFFERS", video_ok ? "identical" : "DIFFERS");
    return sparse_ok && video_ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..12>\n");
        return 2;
    }
    const int n = std::atoi(argv[1]);
    bool (*checks[])(std::string&) = {crit1, crit2, crit3, crit4,  crit5,  crit6,
                                      crit7, crit8, crit9, crit10, crit11, crit12};
    if (n < 1 || n > 12) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..12>\n");
        return 2;
    }
    std::string detail;
    const bool pass = checks[n - 1](detail);
    std::printf("criterion %2d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    return pass ? 0 : 1;
}
