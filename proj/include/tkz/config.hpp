#pragma once

#include "tkz/apps.hpp"
#include "tkz/solvers.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tkz {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    return out;
}

inline double parse_f64(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

// Shortest representation that parses back to the same double.
inline std::string format_f64(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace detail

inline std::string family_name(ExperimentFamily f) {
    switch (f) {
        case ExperimentFamily::sparse_vector: return "sparse";
        case ExperimentFamily::inpainting: return "inpaint";
        case ExperimentFamily::lowrank_tensor: return "tensor";
        case ExperimentFamily::deconvolution: return "deblur";
        case ExperimentFamily::sequence_deconvolution: return "video";
    }
    throw ConfigError("config: unknown family value");
}

inline ExperimentFamily family_from(const std::string& name) {
    if (name == "sparse") return ExperimentFamily::sparse_vector;
    if (name == "inpaint") return ExperimentFamily::inpainting;
    if (name == "tensor") return ExperimentFamily::lowrank_tensor;
    if (name == "deblur") return ExperimentFamily::deconvolution;
    if (name == "video") return ExperimentFamily::sequence_deconvolution;
    throw ConfigError("config: unknown family '" + name + "'");
}

// Full run description: a flat set of typed keys grouped into four sections.
// Files are line-oriented "key = value" under "[section]" headers; '#' starts
// a comment; unknown keys are rejected; later assignments override earlier
// ones, which is also how command-line overrides are applied.
struct RunConfig {
    ExperimentFamily family = ExperimentFamily::sparse_vector;
    std::uint64_t seed = 1;

    std::size_t rows = 0, cols = 0;
    std::size_t depth = 1, width_k = 1;
    std::size_t sparsity = 0;
    std::size_t rank = 0;
    std::size_t tile = 16;
    Box box;
    std::size_t kernel_size = 9;
    double kernel_sigma = 2.0;
    std::size_t pad = 14;
    std::size_t frames = 1;
    double noise_level = 0.0;

    std::string method = "kaczmarz";   // kaczmarz | linbreg
    std::string control = "cyclic";    // cyclic | uniform | weighted
    double lambda = 0.0;
    double step_t = 1.0;
    std::size_t batch_size = 1;
    std::size_t max_iters = 100;
    double tol = 0.0;
    std::size_t trace_every = 10;
    bool row_normalize = true;
    std::string safety = "automatic";  // automatic | enforced | off

    std::string out_dir = "runs/out";

    static RunConfig defaults_for(ExperimentFamily f) {
        RunConfig c;
        c.family = f;
        c.out_dir = "runs/" + family_name(f);
        switch (f) {
            case ExperimentFamily::sparse_vector:
                c.rows = 200;
                c.cols = 1000;
                c.sparsity = 10;
                c.lambda = 5.0;
                c.step_t = 40.0;
                c.max_iters = 4000;
                c.trace_every = 100;
                break;
            case ExperimentFamily::inpainting:
                c.rows = 128;
                c.cols = 128;
                c.tile = 16;
                c.box = {24, 12, 80, 104};
                c.lambda = 1500.0;
                c.step_t = 9.0;
                c.batch_size = 2000;
                c.max_iters = 800;
                c.trace_every = 50;
                break;
            case ExperimentFamily::lowrank_tensor:
                c.rows = 200;
                c.cols = 100;
                c.width_k = 100;
                c.depth = 100;
                c.rank = 2;
                c.lambda = 0.0;
                c.step_t = 1.0;
                c.max_iters = 2000;
                c.trace_every = 100;
                c.safety = "off";
                break;
            case ExperimentFamily::deconvolution:
                c.rows = 64;
                c.cols = 64;
                c.kernel_size = 9;
                c.kernel_sigma = 2.0;
                c.pad = 14;
                c.lambda = 0.1;
                c.step_t = 1.0;
                c.batch_size = 80;
                c.max_iters = 1000;
                c.trace_every = 50;
                c.row_normalize = false;
                c.safety = "off";
                break;
            case ExperimentFamily::sequence_deconvolution:
                c.rows = 48;
                c.cols = 48;
                c.frames = 4;
                c.kernel_size = 5;
                c.kernel_sigma = 2.0;
                c.pad = 4;
                c.lambda = 0.01;
                c.step_t = 1.0;
                c.batch_size = 60;
                c.max_iters = 300;
                c.trace_every = 20;
                c.row_normalize = false;
                c.safety = "off";
                break;
        }
        return c;
    }

    // One typed assignment by fully-qualified key. Unknown keys and malformed
    // values raise ConfigError.
    void apply(const std::string& key, const std::string& value) {
        using detail::parse_bool;
        using detail::parse_f64;
        using detail::parse_u64;
        if (key == "experiment.family") family = family_from(value);
        else if (key == "experiment.seed") seed = parse_u64(key, value);
        else if (key == "problem.rows") rows = parse_u64(key, value);
        else if (key == "problem.cols") cols = parse_u64(key, value);
        else if (key == "problem.depth") depth = parse_u64(key, value);
        else if (key == "problem.width_k") width_k = parse_u64(key, value);
        else if (key == "problem.sparsity") sparsity = parse_u64(key, value);
        else if (key == "problem.rank") rank = parse_u64(key, value);
        else if (key == "problem.tile") tile = parse_u64(key, value);
        else if (key == "problem.box_row") box.row = parse_u64(key, value);
        else if (key == "problem.box_col") box.col = parse_u64(key, value);
        else if (key == "problem.box_height") box.height = parse_u64(key, value);
        else if (key == "problem.box_width") box.width = parse_u64(key, value);
        else if (key == "problem.kernel_size") kernel_size = parse_u64(key, value);
        else if (key == "problem.kernel_sigma") kernel_sigma = parse_f64(key, value);
        else if (key == "problem.pad") pad = parse_u64(key, value);
        else if (key == "problem.frames") frames = parse_u64(key, value);
        else if (key == "problem.noise_level") noise_level = parse_f64(key, value);
        else if (key == "solver.method") {
            if (value != "kaczmarz" && value != "linbreg")
                throw ConfigError("config: solver.method must be kaczmarz or linbreg");
            method = value;
        } else if (key == "solver.control") {
            if (value != "cyclic" && value != "uniform" && value != "weighted")
                throw ConfigError("config: solver.control must be cyclic, uniform, or weighted");
            control = value;
        } else if (key == "solver.lambda") lambda = parse_f64(key, value);
        else if (key == "solver.step_t") step_t = parse_f64(key, value);
        else if (key == "solver.batch_size") batch_size = parse_u64(key, value);
        else if (key == "solver.max_iters") max_iters = parse_u64(key, value);
        else if (key == "solver.tol") tol = parse_f64(key, value);
        else if (key == "solver.trace_every") trace_every = parse_u64(key, value);
        else if (key == "solver.row_normalize") row_normalize = parse_bool(key, value);
        else if (key == "solver.safety") {
            if (value != "automatic" && value != "enforced" && value != "off")
                throw ConfigError("config: solver.safety must be automatic, enforced, or off");
            safety = value;
        } else if (key == "output.dir") {
            if (value.empty()) throw ConfigError("config: output.dir must not be empty");
            out_dir = value;
        } else throw ConfigError("config: unknown key '" + key + "'");
    }

    void load_stream(std::istream& in) {
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("config: malformed section at line " + std::to_string(lineno));
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
            apply(section.empty() ? key : section + "." + key, value);
        }
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        load_stream(in);
    }

    // "section.key=value" as given on the command line.
    void set_override(const std::string& spec) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: override must look like section.key=value: '" + spec + "'");
        apply(detail::trim(spec.substr(0, eq)), detail::trim(spec.substr(eq + 1)));
    }

    // Every key, explicit, in a fixed order; reparsing reproduces the config.
    std::string resolved_text() const {
        std::ostringstream out;
        out << "[experiment]\n";
        out << "family = " << family_name(family) << "\n";
        out << "seed = " << seed << "\n";
        out << "\n[problem]\n";
        out << "rows = " << rows << "\n";
        out << "cols = " << cols << "\n";
        out << "depth = " << depth << "\n";
        out << "width_k = " << width_k << "\n";
        out << "sparsity = " << sparsity << "\n";
        out << "rank = " << rank << "\n";
        out << "tile = " << tile << "\n";
        out << "box_row = " << box.row << "\n";
        out << "box_col = " << box.col << "\n";
        out << "box_height = " << box.height << "\n";
        out << "box_width = " << box.width << "\n";
        out << "kernel_size = " << kernel_size << "\n";
        out << "kernel_sigma = " << detail::format_f64(kernel_sigma) << "\n";
        out << "pad = " << pad << "\n";
        out << "frames = " << frames << "\n";
        out << "noise_level = " << detail::format_f64(noise_level) << "\n";
        out << "\n[solver]\n";
        out << "method = " << method << "\n";
        out << "control = " << control << "\n";
        out << "lambda = " << detail::format_f64(lambda) << "\n";
        out << "step_t = " << detail::format_f64(step_t) << "\n";
        out << "batch_size = " << batch_size << "\n";
        out << "max_iters = " << max_iters << "\n";
        out << "tol = " << detail::format_f64(tol) << "\n";
        out << "trace_every = " << trace_every << "\n";
        out << "row_normalize = " << (row_normalize ? "true" : "false") << "\n";
        out << "safety = " << safety << "\n";
        out << "\n[output]\n";
        out << "dir = " << out_dir << "\n";
        return out.str();
    }

    SolveConfig solver_config() const {
        SolveConfig s;
        s.step_t = step_t;
        s.max_iters = max_iters;
        s.tol = tol;
        s.batch_size = batch_size;
        s.trace_every = trace_every;
        s.row_normalize = row_normalize;
        if (safety == "automatic") s.safety = SafetyMode::automatic;
        else if (safety == "enforced") s.safety = SafetyMode::enforced;
        else s.safety = SafetyMode::off;
        return s;
    }

    ControlSequence control_sequence() const {
        // Constraint selection draws from its own stream, split off the run
        // seed so it never shares draws with the problem generator.
        const std::uint64_t split = seed ^ 0x9e3779b97f4a7c15ull;
        if (control == "uniform") return ControlSequence::uniform_random(split);
        if (control == "weighted") return ControlSequence::weighted_random(split);
        return ControlSequence::cyclic();
    }

    ExperimentSpec to_spec() const {
        ExperimentSpec s;
        s.family = family;
        s.rows = rows;
        s.cols = cols;
        s.depth = depth;
        s.width_k = width_k;
        s.sparsity = sparsity;
        s.rank = rank;
        s.tile = tile;
        s.box = box;
        s.kernel_size = kernel_size;
        s.kernel_sigma = kernel_sigma;
        s.pad = pad;
        s.frames = frames;
        s.noise_level = noise_level;
        s.lambda = lambda;
        s.solver = solver_config();
        s.seed = seed;
        return s;
    }
};

}  // namespace tkz
