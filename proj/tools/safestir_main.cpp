#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "safestir/errors.hpp"
#include "safestir/harness/config.hpp"
#include "safestir/harness/experiment.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitNumericFailure = 4;

std::string resolve_out_root(const std::string& flag_value,
                             const safestir::harness::ExperimentConfig& config) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("SAFESTIR_OUT"); env && *env) return env;
    return config.output_dir;
}

safestir::harness::ExperimentConfig resolve_config(const std::string& config_path,
                                                   const std::string& preset,
                                                   std::uint64_t seed, bool seed_set,
                                                   const std::string& condition) {
    safestir::harness::ExperimentConfig config =
        config_path.empty() ? safestir::harness::default_config(
                                  preset.empty() ? "desk" : preset)
                            : safestir::harness::load_config(config_path);
    if (!config_path.empty() && !preset.empty() && preset != config.preset) {
        // Re-resolve the file on top of the requested preset.
        config = safestir::harness::default_config(preset);
        auto file = safestir::harness::load_config(config_path);
        file.preset = preset;
        config = file;
    }
    if (seed_set) config.seed = seed;
    if (!condition.empty()) config.condition = condition;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safestir: stirring-skill safety experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, preset, out_flag;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "experiment config file (JSON)");
    app.add_option("--preset", preset, "desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; },
           "master seed override");
    app.add_option("--out", out_flag, "output root (overrides SAFESTIR_OUT and config)");

    auto* train = app.add_subcommand("train", "train one skill");
    std::string train_skill;
    train->add_option("skill", train_skill,
                      "stir | slide | overturn | spill | compound")
        ->required();

    auto* eval = app.add_subcommand("eval", "evaluate a condition");
    std::string eval_condition;
    eval->add_option("condition", eval_condition,
                     "pi_b-F | pi_b-U | L2-F | L4-U | pi_c-U | custom")
        ->required();

    auto* compare = app.add_subcommand("compare", "compare condition results");
    std::string compare_dir;
    compare->add_option("dir", compare_dir, "results directory")->required();

    auto* trace = app.add_subcommand("trace", "dump one particle trajectory");
    std::string trace_condition;
    int trace_particle = 0;
    trace->add_option("condition", trace_condition, "condition id")->required();
    trace->add_option("--particle", trace_particle, "particle index");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            auto config = resolve_config(config_path, preset, seed, seed_set, "");
            std::string out = resolve_out_root(out_flag, config);
            auto outcome = safestir::harness::cmd_train(train_skill, config, out);
            std::cout << "trained " << train_skill << ": best eval "
                      << outcome.best_eval << " at episode " << outcome.best_episode
                      << "\n  checkpoint: " << outcome.checkpoint
                      << "\n  curve:      " << outcome.curve_csv << "\n";
        } else if (eval->parsed()) {
            auto config = resolve_config(config_path, preset, seed, seed_set,
                                         eval_condition);
            std::string out = resolve_out_root(out_flag, config);
            auto metrics = safestir::harness::cmd_eval(config, out);
            std::cout << metrics.model << ": stir " << metrics.stir_mean << " +- "
                      << metrics.stir_std << ", spill " << metrics.spill_mean
                      << ", slide d ";
            if (metrics.slide_na)
                std::cout << "N/A";
            else
                std::cout << metrics.slide_mean;
            std::cout << ", overturn theta ";
            if (metrics.overturn_na)
                std::cout << "N/A";
            else
                std::cout << metrics.overturn_mean;
            std::cout << " (" << metrics.episodes << " episodes)\n";
        } else if (compare->parsed()) {
            auto report = safestir::harness::cmd_compare(compare_dir);
            std::cout << report.text;
        } else if (trace->parsed()) {
            auto config = resolve_config(config_path, preset, seed, seed_set,
                                         trace_condition);
            std::string out = resolve_out_root(out_flag, config);
            std::string path = safestir::harness::cmd_trace(config, trace_particle, out);
            std::cout << "trace written: " << path << "\n";
        }
    } catch (const safestir::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const safestir::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kExitMissingArtifact;
    } catch (const safestir::TrainingError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumericFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
