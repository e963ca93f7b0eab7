#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bprobe/commands.hpp"
#include "bprobe/config.hpp"
#include "bprobe/decoder.hpp"
#include "bprobe/errors.hpp"

namespace {

using bprobe::RunConfig;
namespace commands = bprobe::commands;

struct GlobalFlags {
    std::string config_path;
    std::string replay_path;
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig resolve_config(const GlobalFlags& flags) {
    RunConfig config;
    if (!flags.config_path.empty()) {
        config = bprobe::load_config(flags.config_path);
    }
    if (!flags.replay_path.empty()) {
        config.replay_transcript = flags.replay_path;
    }
    if (flags.seed_set) {
        config.seed = flags.seed;
        config.sampler.seed = flags.seed;
    }
    if (!flags.mode.empty()) {
        auto mode = bprobe::decoder::mode_from_name(flags.mode);
        if (!mode) {
            bprobe::throw_error(bprobe::ErrorCode::ConfigInvalid,
                                "unknown mode: " + flags.mode +
                                    " (expected suppress, mask, or prompt)");
        }
        config.sampler.mode = *mode;
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-boundary probe for list-style questions"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file")
        ->check(CLI::ExistingFile);
    app.add_option("--replay", flags.replay_path,
                   "serve chat responses from this transcript instead of the "
                   "network");
    app.add_option("--mode", flags.mode,
                   "decoding mode: suppress, mask, or prompt");
    auto* seed_opt = app.add_option("--seed", flags.seed, "run seed");

    auto* build = app.add_subcommand(
        "build-dataset", "collect questions and answer lists from the target");
    auto* discover = app.add_subcommand(
        "discover", "decode the auxiliary model with suppression and extract "
                    "candidate new answers");
    auto* evaluate = app.add_subcommand(
        "evaluate", "verify answers with self and search-grounded evaluations "
                    "and write the report");
    auto* report =
        app.add_subcommand("report", "re-render report.md from report.json");
    auto* selfcheck =
        app.add_subcommand("selfcheck", "run built-in invariant checks");

    CLI11_PARSE(app, argc, argv);
    flags.seed_set = seed_opt->count() > 0;

    try {
        const RunConfig config = resolve_config(flags);
        if (build->parsed()) return commands::cmd_build_dataset(config);
        if (discover->parsed()) return commands::cmd_discover(config);
        if (evaluate->parsed()) return commands::cmd_evaluate(config);
        if (report->parsed()) return commands::cmd_report(config);
        if (selfcheck->parsed()) return commands::cmd_selfcheck(config);
    } catch (const bprobe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == bprobe::ErrorCode::ConfigInvalid
                   ? commands::kExitConfig
                   : commands::kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return commands::kExitFatal;
    }
    return commands::kExitFatal;
}
