// SPDX-License-Identifier: Apache-2.0
//
// Generates the self-contained demonstration fixture: a synthetic world file,
// the matching raw catalog records, and a ready-to-run configuration. With
// these three files the whole pipeline runs offline:
//
//   sdrouter_make_fixture --out data
//   sdrouter ingest    --config data/config.json
//   sdrouter train-sft --config data/config.json
//   sdrouter align     --config data/config.json
//   sdrouter evaluate  --config data/config.json --check

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "sdr/errors.hpp"
#include "sdr/fixture.hpp"
#include "sdr/jsonl.hpp"
#include "sdr/run_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the sdrouter demonstration fixture"};
    std::string out_dir = "data";
    int n_styles = 6;
    std::uint64_t world_seed = 7;
    std::uint64_t run_seed = 11;
    double noise = 0.02;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--styles", n_styles, "Number of styles (1..10)");
    app.add_option("--seed", world_seed, "Fixture generation seed");
    app.add_option("--run-seed", run_seed, "Seed written into the generated config");
    app.add_option("--noise", noise, "World noise amplitude");
    CLI11_PARSE(app, argc, argv);

    try {
        sdr::FixtureOptions opt;
        opt.n_styles = n_styles;
        opt.seed = world_seed;
        opt.noise_amplitude = noise;
        const sdr::Fixture fx = sdr::make_demo_fixture(opt);

        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);

        sdr::write_file(dir / "styleworld.json", fx.world.to_json().dump(2) + "\n");

        std::vector<nlohmann::json> lines;
        lines.reserve(fx.records.size());
        long images = 0;
        for (const auto& rec : fx.records) {
            images += static_cast<long>(rec.sample_images.size());
            lines.push_back(sdr::serialize_raw_record(rec));
        }
        sdr::write_jsonl(dir / "raw_records.jsonl", lines);

        sdr::RunConfig cfg;
        cfg.seed = run_seed;
        cfg.raw_records = (dir / "raw_records.jsonl").string();
        cfg.world = (dir / "styleworld.json").string();
        cfg.out_dir = (dir / "runs").string();
        cfg.sft.epochs = 2;
        cfg.sft.lr = 0.3;
        cfg.sft.batch_size = 16;
        cfg.rrhf.m = 4;
        cfg.rrhf.n_multinomial = 2;
        cfg.rrhf.lambda = 0.5;
        cfg.rrhf.temperature = 1.0;
        cfg.rrhf.k = 10;
        cfg.rrhf.lr = 0.05;
        cfg.rrhf.epochs = 8;
        cfg.eval.n_images = 3;
        sdr::write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");

        std::cout << "fixture: " << fx.records.size() << " models, " << fx.world.styles.size()
                  << " styles, " << images << " sample images\n";
        std::cout << "wrote " << (dir / "styleworld.json").string() << ", "
                  << (dir / "raw_records.jsonl").string() << ", "
                  << (dir / "config.json").string() << "\n";
        return 0;
    } catch (const sdr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
