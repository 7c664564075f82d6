#pragma once

#include "tkz/convex.hpp"
#include "tkz/rng.hpp"
#include "tkz/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tkz {

// ---------------------------------------------------------------- control

enum class ControlKind { cyclic, uniform_random, weighted_random, custom_prob, explicit_list };

struct ControlSequence {
    ControlKind kind = ControlKind::cyclic;
    std::uint64_t seed = 0;
    std::vector<double> probs;        // custom_prob only
    std::vector<std::size_t> list;    // explicit_list only

    static ControlSequence cyclic() { return {ControlKind::cyclic, 0, {}, {}}; }
    static ControlSequence uniform_random(std::uint64_t seed) {
        return {ControlKind::uniform_random, seed, {}, {}};
    }
    static ControlSequence weighted_random(std::uint64_t seed) {
        return {ControlKind::weighted_random, seed, {}, {}};
    }
    static ControlSequence custom_prob(std::vector<double> probs, std::uint64_t seed) {
        return {ControlKind::custom_prob, seed, std::move(probs), {}};
    }
    static ControlSequence explicit_list(std::vector<std::size_t> list) {
        return {ControlKind::explicit_list, 0, {}, std::move(list)};
    }
};

namespace detail {

// Stateful index source. Weighted and custom draws go through a cumulative
// table with binary search so a seed reproduces the stream on any platform.
class IndexStream {
public:
    IndexStream(const ControlSequence& seq, std::size_t n, const std::vector<double>& weights)
        : seq_(seq), n_(n), rng_(seq.seed) {
        if (n_ == 0) throw std::invalid_argument("IndexStream: empty constraint set");
        switch (seq_.kind) {
            case ControlKind::cyclic:
            case ControlKind::uniform_random:
                break;
            case ControlKind::weighted_random:
                build_cumulative(weights);
                break;
            case ControlKind::custom_prob:
                if (seq_.probs.size() != n_)
                    throw std::invalid_argument("IndexStream: probability count mismatch");
                build_cumulative(seq_.probs);
                break;
            case ControlKind::explicit_list:
                if (seq_.list.empty())
                    throw std::invalid_argument("IndexStream: empty explicit list");
                for (std::size_t i : seq_.list)
                    if (i >= n_) throw std::invalid_argument("IndexStream: list index out of range");
                break;
        }
    }

    std::size_t next() {
        switch (seq_.kind) {
            case ControlKind::cyclic:
                return pos_++ % n_;
            case ControlKind::uniform_random:
                return rng_.below(n_);
            case ControlKind::weighted_random:
            case ControlKind::custom_prob: {
                const double u = rng_.uniform();
                auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
                std::size_t i = static_cast<std::size_t>(it - cum_.begin());
                return std::min(i, n_ - 1);
            }
            case ControlKind::explicit_list:
                return seq_.list[pos_++ % seq_.list.size()];
        }
        throw std::logic_error("IndexStream: unreachable");
    }

private:
    void build_cumulative(const std::vector<double>& w) {
        double total = 0.0;
        for (double v : w) {
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("IndexStream: negative or nonfinite weight");
            total += v;
        }
        if (total <= 0.0) throw std::invalid_argument("IndexStream: weights sum to zero");
        cum_.resize(n_);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            acc += w[i] / total;
            cum_[i] = acc;
        }
        cum_.back() = 1.0;
    }

    ControlSequence seq_;
    std::size_t n_;
    Rng rng_;
    std::size_t pos_ = 0;
    std::vector<double> cum_;
};

}  // namespace detail

// ------------------------------------------------------------- constraints

enum class ConstraintKind { tensor_slices, matrix_rows, vector_rows, matrix_entries, masked_entries };

struct MaskedEntry {
    std::size_t i = 0, j = 0;
    double value = 0.0;
};

// A linear system presented as individually selectable constraints. The three
// slice-shaped kinds share one storage layout (a, b as tensors with the
// constraint index along mode 1); the two entry-shaped kinds act on a matrix
// unknown through sensing matrices or single-entry masks.
struct LinearConstraintSet {
    ConstraintKind kind = ConstraintKind::tensor_slices;
    Tensor3 a;  // slice kinds: n x n2 x n3 operator
    Tensor3 b;  // slice kinds: n x k x n3 right-hand side
    std::vector<Eigen::MatrixXd> sensing;  // matrix_entries
    Eigen::VectorXd sensing_rhs;           // matrix_entries
    std::vector<MaskedEntry> mask;         // masked_entries
    std::size_t x_rows = 0, x_cols = 0;    // unknown dims for entry kinds
    std::optional<Tensor3> noise;          // per-constraint perturbation of b

    static LinearConstraintSet tensor_slices(Tensor3 a, Tensor3 b) {
        if (a.n1 != b.n1 || a.n3 != b.n3)
            throw std::invalid_argument("tensor_slices: operator and rhs dims disagree");
        LinearConstraintSet cs;
        cs.kind = ConstraintKind::tensor_slices;
        cs.a = std::move(a);
        cs.b = std::move(b);
        cs.reject_zero_slices();
        return cs;
    }

    static LinearConstraintSet matrix_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        if (a.rows() != b.rows()) throw std::invalid_argument("matrix_rows: row count mismatch");
        LinearConstraintSet cs;
        cs.kind = ConstraintKind::matrix_rows;
        cs.a = from_matrix(a);
        cs.b = from_matrix(b);
        cs.reject_zero_slices();
        return cs;
    }

    static LinearConstraintSet vector_rows(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
        if (a.rows() != b.size()) throw std::invalid_argument("vector_rows: row count mismatch");
        LinearConstraintSet cs;
        cs.kind = ConstraintKind::vector_rows;
        cs.a = from_matrix(a);
        cs.b = from_matrix(b);
        cs.reject_zero_slices();
        return cs;
    }

    static LinearConstraintSet matrix_entries(std::vector<Eigen::MatrixXd> sensing,
                                              Eigen::VectorXd rhs) {
        if (sensing.empty()) throw std::invalid_argument("matrix_entries: empty constraint set");
        if (static_cast<Eigen::Index>(sensing.size()) != rhs.size())
            throw std::invalid_argument("matrix_entries: rhs count mismatch");
        LinearConstraintSet cs;
        cs.kind = ConstraintKind::matrix_entries;
        cs.x_rows = static_cast<std::size_t>(sensing.front().rows());
        cs.x_cols = static_cast<std::size_t>(sensing.front().cols());
        for (const auto& m : sensing) {
            if (static_cast<std::size_t>(m.rows()) != cs.x_rows ||
                static_cast<std::size_t>(m.cols()) != cs.x_cols)
                throw std::invalid_argument("matrix_entries: inconsistent sensing dims");
            if (m.norm() == 0.0)
                throw std::invalid_argument("matrix_entries: zero-norm sensing matrix");
        }
        cs.sensing = std::move(sensing);
        cs.sensing_rhs = std::move(rhs);
        return cs;
    }

    static LinearConstraintSet masked_entries(std::size_t rows, std::size_t cols,
                                              std::vector<MaskedEntry> mask) {
        if (mask.empty()) throw std::invalid_argument("masked_entries: empty mask");
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& e : mask) {
            if (e.i >= rows || e.j >= cols)
                throw std::invalid_argument("masked_entries: index out of range");
            if (!seen.insert({e.i, e.j}).second)
                throw std::invalid_argument("masked_entries: duplicate index");
        }
        LinearConstraintSet cs;
        cs.kind = ConstraintKind::masked_entries;
        cs.x_rows = rows;
        cs.x_cols = cols;
        cs.mask = std::move(mask);
        return cs;
    }

    LinearConstraintSet& with_noise(Tensor3 e) {
        if (!is_slice_kind()) throw std::invalid_argument("with_noise: slice kinds only");
        if (!e.same_dims(b)) throw std::invalid_argument("with_noise: noise dims must match rhs");
        noise = std::move(e);
        return *this;
    }

    bool is_slice_kind() const {
        return kind == ConstraintKind::tensor_slices || kind == ConstraintKind::matrix_rows ||
               kind == ConstraintKind::vector_rows;
    }

    std::size_t count() const {
        switch (kind) {
            case ConstraintKind::tensor_slices:
            case ConstraintKind::matrix_rows:
            case ConstraintKind::vector_rows:
                return a.n1;
            case ConstraintKind::matrix_entries:
                return sensing.size();
            case ConstraintKind::masked_entries:
                return mask.size();
        }
        throw std::logic_error("count: unreachable");
    }

private:
    static Tensor3 from_matrix(const Eigen::MatrixXd& m) {
        Tensor3 t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), 1);
        t.slice(0) = m;
        return t;
    }

    void reject_zero_slices() {
        if (a.n1 == 0) throw std::invalid_argument("constraints: empty set");
        for (std::size_t i = 0; i < a.n1; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.n3; ++k)
                for (std::size_t j = 0; j < a.n2; ++j) s += a.at(i, j, k) * a.at(i, j, k);
            if (s == 0.0) throw std::invalid_argument("constraints: zero-norm slice");
        }
    }
};

// ------------------------------------------------------------------ config

enum class SafetyMode { automatic, enforced, off };

struct SolveConfig {
    double step_t = 1.0;
    std::size_t max_iters = 100;
    double tol = 0.0;             // 0 disables the relative-change stop
    std::size_t batch_size = 1;
    std::size_t trace_every = 10;
    std::optional<Tensor3> reference;
    bool row_normalize = true;    // divide each increment by the constraint norm
    SafetyMode safety = SafetyMode::automatic;
};

struct TraceRow {
    std::size_t iter = 0;
    std::ptrdiff_t index = -1;    // first constraint of the latest batch
    double residual = 0.0;
    double rel_change = std::numeric_limits<double>::quiet_NaN();
    double rel_err = std::numeric_limits<double>::quiet_NaN();
    double bregman = std::numeric_limits<double>::quiet_NaN();
};

struct SolveTrace {
    std::vector<TraceRow> rows;
    Tensor3 x, z;
    std::string stop_reason;
    double wall_seconds = 0.0;
    double epsilon = 0.0;         // max constraint-relative noise, noisy runs only
    std::vector<std::string> warnings;

    void write_csv(std::ostream& out) const {
        out.precision(17);
        out << "iter,index,residual,rel_change,rel_err,bregman\n";
        for (const auto& r : rows)
            out << r.iter << ',' << r.index << ',' << r.residual << ',' << r.rel_change << ','
                << r.rel_err << ',' << r.bregman << '\n';
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("write_csv: cannot open " + path);
        write_csv(out);
    }
};

// ------------------------------------------------------------------ engine

namespace detail {

inline double half_weight(std::size_t k, std::size_t n3) {
    if (k == 0) return 1.0;
    if (n3 % 2 == 0 && k == n3 / 2) return 1.0;
    return 2.0;
}

// Shared run skeleton for the slice-shaped kinds. The whole iteration lives in
// the transform domain: one forward transform of the inputs up front, inverse
// transforms only at the end (and inside real-domain proxes).
class SliceEngine {
public:
    SliceEngine(const LinearConstraintSet& cs, const Regularizer& reg, const SolveConfig& cfg,
                bool use_noise)
        : cs_(cs), reg_(reg), cfg_(cfg) {
        n_ = cs.a.n1;
        n2_ = cs.a.n2;
        k_ = cs.b.n2;
        n3_ = cs.a.n3;
        h_ = half_spectrum_count(n3_);
        if (reg.kind == RegKind::matrix_nuclear_elastic && n3_ != 1)
            throw std::invalid_argument("solve: matrix regularizer requires n3 = 1");

        Tensor3 rhs = cs.b;
        if (use_noise && cs.noise) {
            for (std::size_t i = 0; i < rhs.data.size(); ++i) rhs.data[i] += cs.noise->data[i];
        }
        ComplexTensor3 fa = fft_tubes(cs.a);
        ComplexTensor3 fb = fft_tubes(rhs);
        fa_.reserve(h_);
        fb_.reserve(h_);
        for (std::size_t j = 0; j < h_; ++j) {
            fa_.push_back(fa.slice(j));
            fb_.push_back(fb.slice(j));
            wf_.push_back(half_weight(j, n3_));
        }
        an2_.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < h_; ++j) s += wf_[j] * fa_[j].row(i).squaredNorm();
            an2_[i] = s / static_cast<double>(n3_);
        }
        if (use_noise && cs.noise) {
            double eps = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                double en = fro_norm(horizontal_slice(*cs.noise, i));
                eps = std::max(eps, en / std::sqrt(an2_[i]));
            }
            epsilon_ = eps;
        }
        v_.assign(h_, Eigen::MatrixXcd::Zero(n2_, k_));
        fx_ = v_;
        if (cfg.reference) {
            const Tensor3& r = *cfg.reference;
            if (r.n1 != n2_ || r.n2 != k_ || r.n3 != n3_)
                throw std::invalid_argument("solve: reference dims mismatch");
            ref_norm_ = fro_norm(r);
            ComplexTensor3 fr = fft_tubes(r);
            for (std::size_t j = 0; j < h_; ++j) fref_.push_back(fr.slice(j));
        }
    }

    SolveTrace run(const ControlSequence& seq) {
        const auto t0 = std::chrono::steady_clock::now();
        SolveTrace trace;
        check_safety(trace);
        IndexStream stream(seq, n_, an2_);
        const double t = cfg_.step_t;
        const std::size_t b = std::max<std::size_t>(1, cfg_.batch_size);

        std::vector<Eigen::MatrixXcd> prev = fx_;
        record(trace, 0, -1);
        std::string stop = "max_iters";
        for (std::size_t iter = 1; iter <= cfg_.max_iters; ++iter) {
            std::ptrdiff_t first = -1;
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t i = stream.next();
                if (first < 0) first = static_cast<std::ptrdiff_t>(i);
                const double coeff = cfg_.row_normalize ? t / an2_[i] : t;
                for (std::size_t j = 0; j < h_; ++j) {
                    Eigen::RowVectorXcd r = fb_[j].row(i) - fa_[j].row(i) * fx_[j];
                    v_[j].noalias() += coeff * (fa_[j].row(i).adjoint() * r);
                }
            }
            double vn = 0.0;
            for (std::size_t j = 0; j < h_; ++j) vn += v_[j].squaredNorm();
            if (!std::isfinite(vn)) {
                stop = "diverged: nonfinite iterate at iter " + std::to_string(iter);
                break;
            }
            apply_prox();
            const bool at_trace = iter % cfg_.trace_every == 0 || iter == cfg_.max_iters;
            if (at_trace) {
                const double rc = rel_change(prev);
                record(trace, iter, first, rc);
                prev = fx_;
                if (cfg_.tol > 0.0 && rc <= cfg_.tol) {
                    stop = "tol";
                    break;
                }
            }
        }
        trace.stop_reason = stop;
        trace.epsilon = epsilon_;
        trace.x = assemble(fx_);
        trace.z = assemble(v_);
        trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return trace;
    }

private:
    void check_safety(SolveTrace& trace) const {
        const double bound = 2.0 * reg_.alpha_f / static_cast<double>(n3_);
        const bool tensor_problem = cs_.kind == ConstraintKind::tensor_slices && n3_ > 1;
        SafetyMode mode = cfg_.safety;
        if (mode == SafetyMode::automatic)
            mode = tensor_problem ? SafetyMode::enforced : SafetyMode::off;
        if (cfg_.step_t >= bound) {
            if (mode == SafetyMode::enforced)
                throw std::invalid_argument("solve: step_t breaks the descent bound 2*alpha_f/n3");
            trace.warnings.push_back("step_t >= 2*alpha_f/n3; descent guarantee void");
        }
    }

    void apply_prox() {
        switch (reg_.kind) {
            case RegKind::squared_fro:
                fx_ = v_;
                return;
            case RegKind::tensor_tnn_elastic:
                if (reg_.lambda == 0.0) {
                    fx_ = v_;
                    return;
                }
                for (std::size_t j = 0; j < h_; ++j) fx_[j] = svt(v_[j], reg_.lambda);
                return;
            case RegKind::elastic_l1:
            case RegKind::matrix_nuclear_elastic: {
                Tensor3 x = grad_conj(reg_, assemble(v_));
                ComplexTensor3 f = fft_tubes(x);
                for (std::size_t j = 0; j < h_; ++j) fx_[j] = f.slice(j);
                return;
            }
        }
    }

    Tensor3 assemble(const std::vector<Eigen::MatrixXcd>& half) const {
        ComplexTensor3 full(n2_, k_, n3_);
        for (std::size_t j = 0; j < h_; ++j) full.slice(j) = half[j];
        for (std::size_t j = h_; j < n3_; ++j) full.slice(j) = half[n3_ - j].conjugate();
        return ifft_tubes(full);
    }

    double weighted_norm(const std::vector<Eigen::MatrixXcd>& half) const {
        double s = 0.0;
        for (std::size_t j = 0; j < h_; ++j) s += wf_[j] * half[j].squaredNorm();
        return std::sqrt(s / static_cast<double>(n3_));
    }

    double rel_change(const std::vector<Eigen::MatrixXcd>& prev) const {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < h_; ++j) {
            num += wf_[j] * (fx_[j] - prev[j]).squaredNorm();
            den += wf_[j] * prev[j].squaredNorm();
        }
        if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::sqrt(num / den);
    }

    double full_residual() const {
        double s = 0.0;
        for (std::size_t j = 0; j < h_; ++j) s += wf_[j] * (fa_[j] * fx_[j] - fb_[j]).squaredNorm();
        return std::sqrt(s / static_cast<double>(n3_));
    }

    double reference_bregman() const {
        switch (reg_.kind) {
            case RegKind::squared_fro:
            case RegKind::tensor_tnn_elastic: {
                const double lam = reg_.kind == RegKind::squared_fro ? 0.0 : reg_.lambda;
                double s = 0.0;
                for (std::size_t j = 0; j < h_; ++j) {
                    const double d = melastic_value(fref_[j], lam) + melastic_conj_value(v_[j], lam) -
                                     (v_[j].conjugate().cwiseProduct(fref_[j])).sum().real();
                    s += wf_[j] * d;
                }
                return s / static_cast<double>(n3_);
            }
            case RegKind::elastic_l1:
            case RegKind::matrix_nuclear_elastic:
                return bregman(reg_, assemble(v_), *cfg_.reference);
        }
        throw std::logic_error("reference_bregman: unreachable");
    }

    void record(SolveTrace& trace, std::size_t iter, std::ptrdiff_t index,
                double rc = std::numeric_limits<double>::quiet_NaN()) {
        TraceRow row;
        row.iter = iter;
        row.index = index;
        row.residual = full_residual();
        row.rel_change = rc;
        if (cfg_.reference) {
            double num = 0.0;
            for (std::size_t j = 0; j < h_; ++j) num += wf_[j] * (fx_[j] - fref_[j]).squaredNorm();
            row.rel_err = std::sqrt(num / static_cast<double>(n3_)) / std::max(ref_norm_, 1e-300);
            row.bregman = reference_bregman();
        }
        trace.rows.push_back(row);
    }

    const LinearConstraintSet& cs_;
    Regularizer reg_;
    SolveConfig cfg_;
    std::size_t n_ = 0, n2_ = 0, k_ = 0, n3_ = 0, h_ = 0;
    std::vector<Eigen::MatrixXcd> fa_, fb_, v_, fx_, fref_;
    std::vector<double> wf_, an2_;
    double ref_norm_ = 0.0;
    double epsilon_ = 0.0;
};

// Run skeleton for the entry-shaped kinds on a matrix unknown.
class EntryEngine {
public:
    EntryEngine(const LinearConstraintSet& cs, const Regularizer& reg, const SolveConfig& cfg)
        : cs_(cs), reg_(reg), cfg_(cfg) {
        rows_ = cs.x_rows;
        cols_ = cs.x_cols;
        n_ = cs.count();
        an2_.assign(n_, 1.0);
        if (cs.kind == ConstraintKind::matrix_entries)
            for (std::size_t i = 0; i < n_; ++i) an2_[i] = cs.sensing[i].squaredNorm();
        if (cfg.reference) {
            const Tensor3& r = *cfg.reference;
            if (r.n1 != rows_ || r.n2 != cols_ || r.n3 != 1)
                throw std::invalid_argument("solve: reference dims mismatch");
            ref_ = r.slice(0);
        }
    }

    SolveTrace run(const ControlSequence& seq) {
        const auto t0 = std::chrono::steady_clock::now();
        SolveTrace trace;
        const double bound = 2.0 * reg_.alpha_f;
        if (cfg_.step_t >= bound) {
            if (cfg_.safety == SafetyMode::enforced)
                throw std::invalid_argument("solve: step_t breaks the descent bound 2*alpha_f/n3");
            trace.warnings.push_back("step_t >= 2*alpha_f/n3; descent guarantee void");
        }

        IndexStream stream(seq, n_, an2_);
        const double t = cfg_.step_t;
        const std::size_t b = std::max<std::size_t>(1, cfg_.batch_size);
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows_, cols_);
        Eigen::MatrixXd x = z;
        Eigen::MatrixXd prev = x;
        record(trace, 0, -1, x, z);
        std::string stop = "max_iters";
        for (std::size_t iter = 1; iter <= cfg_.max_iters; ++iter) {
            std::ptrdiff_t first = -1;
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t i = stream.next();
                if (first < 0) first = static_cast<std::ptrdiff_t>(i);
                const double coeff = cfg_.row_normalize ? t / an2_[i] : t;
                if (cs_.kind == ConstraintKind::masked_entries) {
                    const MaskedEntry& e = cs_.mask[i];
                    z(e.i, e.j) += coeff * (e.value - x(e.i, e.j));
                } else {
                    const double r = cs_.sensing_rhs[static_cast<Eigen::Index>(i)] -
                                     cs_.sensing[i].cwiseProduct(x).sum();
                    z.noalias() += coeff * r * cs_.sensing[i];
                }
            }
            if (!std::isfinite(z.squaredNorm())) {
                stop = "diverged: nonfinite iterate at iter " + std::to_string(iter);
                break;
            }
            x = prox(z);
            const bool at_trace = iter % cfg_.trace_every == 0 || iter == cfg_.max_iters;
            if (at_trace) {
                const double pn = prev.norm();
                const double rc = pn == 0.0 ? ((x - prev).norm() == 0.0 ? 0.0
                                                                        : std::numeric_limits<double>::infinity())
                                            : (x - prev).norm() / pn;
                record(trace, iter, first, x, z, rc);
                prev = x;
                if (cfg_.tol > 0.0 && rc <= cfg_.tol) {
                    stop = "tol";
                    break;
                }
            }
        }
        trace.stop_reason = stop;
        trace.x = wrap(x);
        trace.z = wrap(z);
        trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return trace;
    }

private:
    Eigen::MatrixXd prox(const Eigen::MatrixXd& z) const {
        switch (reg_.kind) {
            case RegKind::squared_fro:
                return z;
            case RegKind::elastic_l1: {
                Eigen::MatrixXd x = z;
                for (Eigen::Index c = 0; c < x.size(); ++c)
                    x.data()[c] = soft_threshold(x.data()[c], reg_.lambda);
                return x;
            }
            case RegKind::matrix_nuclear_elastic:
            case RegKind::tensor_tnn_elastic:
                return reg_.lambda == 0.0 ? z : svt(z, reg_.lambda);
        }
        throw std::logic_error("prox: unreachable");
    }

    double residual_norm(const Eigen::MatrixXd& x) const {
        double s = 0.0;
        if (cs_.kind == ConstraintKind::masked_entries) {
            for (const auto& e : cs_.mask) {
                const double r = e.value - x(e.i, e.j);
                s += r * r;
            }
        } else {
            for (std::size_t i = 0; i < n_; ++i) {
                const double r = cs_.sensing_rhs[static_cast<Eigen::Index>(i)] -
                                 cs_.sensing[i].cwiseProduct(x).sum();
                s += r * r;
            }
        }
        return std::sqrt(s);
    }

    Tensor3 wrap(const Eigen::MatrixXd& m) const {
        Tensor3 t(rows_, cols_, 1);
        t.slice(0) = m;
        return t;
    }

    void record(SolveTrace& trace, std::size_t iter, std::ptrdiff_t index, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& z, double rc = std::numeric_limits<double>::quiet_NaN()) {
        TraceRow row;
        row.iter = iter;
        row.index = index;
        row.residual = residual_norm(x);
        row.rel_change = rc;
        if (cfg_.reference) {
            row.rel_err = (x - ref_).norm() / std::max(ref_.norm(), 1e-300);
            row.bregman = bregman(reg_, wrap(z), *cfg_.reference);
        }
        trace.rows.push_back(row);
    }

    const LinearConstraintSet& cs_;
    Regularizer reg_;
    SolveConfig cfg_;
    std::size_t rows_ = 0, cols_ = 0, n_ = 0;
    std::vector<double> an2_;
    Eigen::MatrixXd ref_;
};

inline SolveTrace run_engine(const LinearConstraintSet& cs, const Regularizer& reg,
                             const ControlSequence& seq, const SolveConfig& cfg, bool use_noise) {
    if (cs.is_slice_kind()) return SliceEngine(cs, reg, cfg, use_noise).run(seq);
    return EntryEngine(cs, reg, cfg).run(seq);
}

}  // namespace detail

// ---------------------------------------------------------------- frontend

// One dual increment per selected constraint, one conjugate-gradient map per
// outer step; batch_size = 1 is the pure single-constraint method.
inline SolveTrace solve(const LinearConstraintSet& cs, const Regularizer& reg,
                        const ControlSequence& seq, const SolveConfig& cfg) {
    return detail::run_engine(cs, reg, seq, cfg, false);
}

// Same engine with the stored per-constraint perturbation added to the
// right-hand side; the trace records the worst constraint-relative noise.
inline SolveTrace solve_noisy(const LinearConstraintSet& cs, const Regularizer& reg,
                              const ControlSequence& seq, const SolveConfig& cfg) {
    return detail::run_engine(cs, reg, seq, cfg, true);
}

// Batches are consecutive chunks of the control stream: cyclic order chunks
// the sweep (wrapping across sweep ends), random kinds draw each batch i.i.d.
inline SolveTrace solve_batched(const LinearConstraintSet& cs, const Regularizer& reg,
                                const ControlSequence& seq, const SolveConfig& cfg) {
    return detail::run_engine(cs, reg, seq, cfg, false);
}

// Full-gradient dual ascent: every outer step accumulates all constraints
// without row normalization, then applies the conjugate-gradient map once.
inline SolveTrace linbreg(const LinearConstraintSet& cs, const Regularizer& reg,
                          const SolveConfig& cfg) {
    SolveConfig full = cfg;
    full.batch_size = cs.count();
    full.row_normalize = false;
    if (full.safety == SafetyMode::automatic) full.safety = SafetyMode::off;
    return detail::run_engine(cs, reg, ControlSequence::cyclic(), full, false);
}

// min over constraints i and frequencies j of t r_ij (1 - t r_ij) with
// r_ij the share of frequency j in constraint i's squared norm. Frequencies
// holding a vanishing share (below 1e-24, i.e. transform roundoff on an
// empty frequency) do not evolve and are excluded from the min.
inline double compute_beta(const Tensor3& a, double t) {
    if (t <= 0.0 || t >= 2.0 / static_cast<double>(a.n3))
        throw std::invalid_argument("compute_beta: t out of range");
    ComplexTensor3 fa = fft_tubes(a);
    const std::size_t h = half_spectrum_count(a.n3);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.n1; ++i) {
        double tot = 0.0;
        for (std::size_t j = 0; j < h; ++j)
            tot += detail::half_weight(j, a.n3) * fa.slice(j).row(i).squaredNorm();
        if (tot == 0.0) throw std::invalid_argument("compute_beta: zero-norm slice");
        for (std::size_t j = 0; j < h; ++j) {
            const double r = fa.slice(j).row(i).squaredNorm() / tot;
            if (r < 1e-24) continue;
            best = std::min(best, t * r * (1.0 - t * r));
        }
    }
    return best;
}

// Dual objective f*(adjoint applied to y) minus <y, rhs>; diagnostic only.
inline double dual_value(const LinearConstraintSet& cs, const Regularizer& reg, const Tensor3& y) {
    switch (cs.kind) {
        case ConstraintKind::tensor_slices:
        case ConstraintKind::matrix_rows:
        case ConstraintKind::vector_rows: {
            if (!y.same_dims(cs.b)) throw std::invalid_argument("dual_value: y dims mismatch");
            Tensor3 w = tprod(transpose_t(cs.a), y);
            return f_conj_value(reg, w) - inner(y, cs.b);
        }
        case ConstraintKind::matrix_entries: {
            if (y.n1 != cs.count() || y.n2 != 1 || y.n3 != 1)
                throw std::invalid_argument("dual_value: y dims mismatch");
            Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cs.x_rows, cs.x_cols);
            double pairing = 0.0;
            for (std::size_t i = 0; i < cs.count(); ++i) {
                w += y.at(i, 0, 0) * cs.sensing[i];
                pairing += y.at(i, 0, 0) * cs.sensing_rhs[static_cast<Eigen::Index>(i)];
            }
            Tensor3 wt(cs.x_rows, cs.x_cols, 1);
            wt.slice(0) = w;
            return f_conj_value(reg, wt) - pairing;
        }
        case ConstraintKind::masked_entries: {
            if (y.n1 != cs.count() || y.n2 != 1 || y.n3 != 1)
                throw std::invalid_argument("dual_value: y dims mismatch");
            Tensor3 wt(cs.x_rows, cs.x_cols, 1);
            double pairing = 0.0;
            for (std::size_t i = 0; i < cs.count(); ++i) {
                wt.at(cs.mask[i].i, cs.mask[i].j, 0) += y.at(i, 0, 0);
                pairing += y.at(i, 0, 0) * cs.mask[i].value;
            }
            return f_conj_value(reg, wt) - pairing;
        }
    }
    throw std::logic_error("dual_value: unreachable");
}

}  // namespace tkz
