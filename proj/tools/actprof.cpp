// Command line front end: train | fit | derive | score | report | full.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.

#include "actprof/errors.hpp"
#include "actprof/experiment.hpp"
#include "actprof/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct flag_overrides {
    std::vector<std::pair<std::string, std::string>> pairs;
};

void add_config_flags(CLI::App* cmd, flag_overrides& ov) {
    // every config key doubles as a flag of the same name
    static const char* value_keys[] = {
        "train-images", "train-labels", "test-images", "test-labels",
        "out",          "arch",         "epochs",      "batch-size",
        "learning-rate", "seed",        "c",           "floor-probability",
        "rotation-step", "rotation-max", "random-count", "threads"};
    for (const auto* key : value_keys) {
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [key, &ov](const std::string& v) { ov.pairs.emplace_back(key, v); });
    }
    static const char* bool_keys[] = {"quick", "paper-literal-std", "per-class-norm"};
    for (const auto* key : bool_keys) {
        cmd->add_flag_function(
            std::string("--") + key,
            [key, &ov](std::int64_t) { ov.pairs.emplace_back(key, "1"); });
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(actprof::tool_name) +
                 " - activation-profile likelihood toolkit"};
    app.set_version_flag("--version", std::string(actprof::tool_name) + " " +
                                          actprof::tool_version);
    app.require_subcommand(1);

    std::string config_path;
    flag_overrides overrides;

    const char* stages[] = {"train", "fit", "derive", "score", "report", "full"};
    const char* blurbs[] = {
        "train the classifier and write the checkpoint",
        "fit per-class activation histograms from the training set",
        "derive the random-pixel and rotation image sets",
        "score all four image sets against the fitted profiles",
        "write summary tables, comparison tables and plots",
        "run the whole pipeline and write a manifest"};
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < std::size(stages); ++i) {
        auto* cmd = app.add_subcommand(stages[i], blurbs[i]);
        cmd->add_option("--config", config_path, "flat key=value config file");
        add_config_flags(cmd, overrides);
        cmds.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        actprof::cli::experiment_config cfg;
        if (!config_path.empty())
            cfg = actprof::cli::load_config_file(config_path);
        for (const auto& [key, value] : overrides.pairs)
            actprof::cli::apply_config_line(cfg, key, value);

        using stage_fn = void (*)(const actprof::cli::experiment_config&);
        const stage_fn fns[] = {actprof::cli::cmd_train,  actprof::cli::cmd_fit,
                                actprof::cli::cmd_derive, actprof::cli::cmd_score,
                                actprof::cli::cmd_report, actprof::cli::cmd_full};
        for (std::size_t i = 0; i < std::size(stages); ++i)
            if (cmds[i]->parsed()) fns[i](cfg);
        return 0;
    } catch (const actprof::usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const actprof::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const actprof::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
