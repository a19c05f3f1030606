// SPDX-License-Identifier: Apache-2.0
//
// sdrouter — train and query a text-to-image API recommendation policy.
//
// Commands compose through files under a run directory named by the hash of
// the effective configuration:
//   sdrouter ingest    --config cfg.json
//   sdrouter train-sft --config cfg.json
//   sdrouter align     --config cfg.json
//   sdrouter evaluate  --config cfg.json [--check]
//   sdrouter recommend --config cfg.json [--record] "prompt text"

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdr/errors.hpp"
#include "sdr/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sdrouter: text-to-image API recommendation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    int jobs_override = 1;
    bool check = false;
    bool record = false;
    std::string prompt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Run configuration JSON file")->required();
        sub->add_option("--seed", seed_override, "Override the config seed");
        sub->add_option("--jobs", jobs_override, "Override the worker count")
            ->check(CLI::PositiveNumber);
        return sub;
    };

    CLI::App* ingest = add_common(app.add_subcommand(
        "ingest", "Build the registry and dataset splits from raw records"));
    CLI::App* train_sft = add_common(app.add_subcommand(
        "train-sft", "Supervised training on the train split"));
    CLI::App* align = add_common(app.add_subcommand(
        "align", "Preference training on top of the SFT checkpoint"));
    CLI::App* evaluate = add_common(app.add_subcommand(
        "evaluate", "Score all comparison variants on the eval split"));
    evaluate->add_flag("--check", check, "Exit nonzero unless the expected metric directions hold");
    CLI::App* recommend = add_common(app.add_subcommand(
        "recommend", "Decode one prompt into a recommended API response"));
    recommend->add_flag("--record", record, "Machine-readable single-line JSON output");
    recommend->add_option("prompt", prompt, "Prompt text")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        sdr::RunConfig cfg = sdr::RunConfig::load(config_path);
        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--seed") > 0) cfg.seed = seed_override;
        if (sub->count("--jobs") > 0) cfg.jobs = jobs_override;
        cfg.rrhf.seed = cfg.seed;
        cfg.rrhf.jobs = cfg.jobs;

        if (sub == ingest) return sdr::cmd_ingest(cfg, std::cout);
        if (sub == train_sft) return sdr::cmd_train_sft(cfg, std::cout);
        if (sub == align) return sdr::cmd_align(cfg, std::cout);
        if (sub == evaluate) return sdr::cmd_evaluate(cfg, check, std::cout);
        if (sub == recommend) return sdr::cmd_recommend(cfg, prompt, record, std::cout);
        std::cerr << "error: unknown command\n";
        return 1;
    } catch (const sdr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
