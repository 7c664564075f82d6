#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "tkz/config.hpp"
#include "tkz/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int error_record(const char* kind, const std::string& detail, int code) {
    std::cerr << nlohmann::json{{"error", kind}, {"detail", detail}}.dump() << "\n";
    return code;
}

int run_family(tkz::ExperimentFamily family, const CommonOpts& opts) {
    try {
        tkz::RunConfig cfg = tkz::RunConfig::defaults_for(family);
        if (!opts.config_path.empty()) cfg.load_file(opts.config_path);
        for (const std::string& s : opts.overrides) cfg.set_override(s);
        if (cfg.family != family)
            throw tkz::ConfigError("config: experiment.family disagrees with the subcommand");
        if (opts.seed_given) cfg.seed = opts.seed;
        if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
        tkz::RunArtifacts run = tkz::run_experiment(cfg);
        std::cout << run.summary << "  [" << cfg.out_dir << "]\n";
        return 0;
    } catch (const tkz::ConfigError& e) {
        return error_record("config", e.what(), 2);
    } catch (const std::invalid_argument& e) {
        return error_record("config", e.what(), 2);
    } catch (const tkz::NumericalError& e) {
        return error_record("numerical", e.what(), 3);
    }
}

void add_run_subcommand(CLI::App& app, const std::string& name, const std::string& desc,
                        tkz::ExperimentFamily family, int& exit_code) {
    auto opts = std::make_shared<CommonOpts>();
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts->config_path, "Config file, key = value under [sections]");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [opts](const std::uint64_t& v) {
            opts->seed = v;
            opts->seed_given = true;
        },
        "Override the run seed");
    sub->add_option("--out", opts->out_dir, "Output directory");
    sub->add_option("--set", opts->overrides, "Override one key, section.key=value")
        ->take_all()
        ->allow_extra_args(false);
    sub->callback([opts, family, &exit_code] { exit_code = run_family(family, *opts); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized Kaczmarz recovery of sparse vectors, low-rank matrices, and tensors"};
    app.require_subcommand(1);
    int exit_code = 0;

    add_run_subcommand(app, "sparse", "Sparse vector recovery from Gaussian measurements",
                       tkz::ExperimentFamily::sparse_vector, exit_code);
    add_run_subcommand(app, "inpaint", "Low-rank matrix completion from observed entries",
                       tkz::ExperimentFamily::inpainting, exit_code);
    add_run_subcommand(app, "tensor", "Low tubal rank tensor recovery",
                       tkz::ExperimentFamily::lowrank_tensor, exit_code);
    add_run_subcommand(app, "deblur", "Single-image deconvolution",
                       tkz::ExperimentFamily::deconvolution, exit_code);
    add_run_subcommand(app, "video", "Multi-frame sequence deconvolution",
                       tkz::ExperimentFamily::sequence_deconvolution, exit_code);

    {
        CLI::App* sub = app.add_subcommand("selftest", "Run the built-in property suite");
        auto seed = std::make_shared<std::uint64_t>(1);
        auto corrupt = std::make_shared<bool>(false);
        sub->add_option("--seed", *seed, "Seed for the randomized instances");
        sub->add_flag("--corrupt-fft", *corrupt,
                      "Debug: mis-normalize the forward transform; the frequency split check "
                      "must then fail");
        sub->callback([seed, corrupt, &exit_code] {
            exit_code = tkz::run_selftest(std::cout, *seed, *corrupt) == 0 ? 0 : 3;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_record("config", e.what(), 2);
    }
    return exit_code;
}
