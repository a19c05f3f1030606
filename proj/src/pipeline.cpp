// SPDX-License-Identifier: Apache-2.0
#include "sdr/pipeline.hpp"

#include <filesystem>
#include <memory>
#include <ostream>

#include "sdr/alignment.hpp"
#include "sdr/catalog.hpp"
#include "sdr/errors.hpp"
#include "sdr/evaluation.hpp"
#include "sdr/jsonl.hpp"
#include "sdr/remote_scorer.hpp"
#include "sdr/styleworld.hpp"

namespace sdr {
namespace {

namespace fs = std::filesystem;

void ensure_parent(const fs::path& path) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& content) {
    ensure_parent(path);
    write_file(path, content);
}

void write_records(const fs::path& path, const std::vector<nlohmann::json>& records) {
    ensure_parent(path);
    write_jsonl(path, records);
}

void write_pairs(const fs::path& path, const std::vector<InstructionApiPair>& pairs) {
    std::vector<nlohmann::json> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) lines.push_back(serialize_pair(p));
    write_records(path, lines);
}

std::vector<InstructionApiPair> load_pairs(const fs::path& path) {
    std::vector<InstructionApiPair> out;
    for (const auto& j : read_jsonl(path)) out.push_back(parse_pair(j));
    return out;
}

Registry load_registry(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("registry file " + path.string() + " is not valid JSON: " + e.what());
    }
    return Registry::from_json(j);
}

std::unique_ptr<TextGenClient> make_textgen(const RunConfig& cfg) {
    switch (cfg.textgen) {
        case TextGenChoice::Echo: return std::make_unique<EchoTextGenClient>();
        case TextGenChoice::Remote: return std::make_unique<RemoteTextGenClient>(cfg.textgen_endpoint);
        case TextGenChoice::None: break;
    }
    return std::make_unique<NullTextGenClient>();
}

StyleWorld make_world(const RunConfig& cfg) {
    if (cfg.world.empty())
        throw ConfigError("config field 'world' is required for this command");
    return StyleWorld(load_styleworld(cfg.world));
}

std::unique_ptr<MetricScorer> make_scorer(const RunConfig& cfg, const StyleWorld& world) {
    if (cfg.scorer == ScorerChoice::Remote)
        return std::make_unique<RemoteMetricScorer>(cfg.scorer_endpoint);
    return std::make_unique<LocalMetricScorer>(world);
}

T2IApi default_response(const RegistryEntry& entry) {
    T2IApi api;
    api.info = entry.info;
    api.params = default_params(entry.info.base_model);
    return api;
}

} // namespace

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
    if (cfg.raw_records.empty())
        throw ConfigError("ingest: config field 'raw_records' is required");

    // Read and validate everything before the first write, so a bad input
    // leaves no partial artifacts behind.
    std::vector<RawModelRecord> records;
    {
        const auto lines = read_jsonl(cfg.raw_records);
        records.reserve(lines.size());
        for (size_t i = 0; i < lines.size(); ++i) {
            try {
                records.push_back(parse_raw_record(lines[i]));
            } catch (const Error& e) {
                throw Error("ingest/parse: " + cfg.raw_records + " line " +
                            std::to_string(i + 1) + ": " + e.what());
            }
        }
    }

    AvailabilityStats astats;
    auto available = filter_availability(records, &astats);
    auto qualified = filter_quality(available, cfg.quality);

    long degraded = 0;
    {
        auto client = make_textgen(cfg);
        for (auto& rec : qualified) rec.description = reconstruct_description(rec, *client, &degraded);
    }

    Registry registry;
    BuildPairsStats pstats;
    DatasetSplits splits;
    try {
        registry = build_registry(qualified);
        auto pairs = build_pairs(qualified, registry, &pstats);
        splits = split_dataset(std::move(pairs), cfg.seed);
    } catch (const Error& e) {
        throw Error(std::string("ingest/build: ") + e.what());
    }

    write_text(cfg.artifact("registry.json"), registry.to_json().dump(2) + "\n");
    write_pairs(cfg.artifact("train.jsonl"), splits.train);
    write_pairs(cfg.artifact("align.jsonl"), splits.align);
    write_pairs(cfg.artifact("eval.jsonl"), splits.eval);

    nlohmann::json summary;
    summary["config_hash"] = cfg.config_hash();
    summary["input_records"] = astats.input;
    summary["availability"] = {{"dropped_unavailable", astats.dropped_unavailable},
                               {"dropped_nsfw", astats.dropped_nsfw},
                               {"dropped_bad_kind", astats.dropped_bad_kind},
                               {"dropped_bad_arch", astats.dropped_bad_arch},
                               {"dropped_lora_no_base", astats.dropped_lora_no_base},
                               {"images_dropped_nsfw", astats.images_dropped_nsfw},
                               {"images_dropped_unresolved", astats.images_dropped_unresolved},
                               {"retained", astats.retained}};
    summary["after_quality"] = qualified.size();
    summary["descriptions_degraded"] = degraded;
    summary["pairs"] = {{"images", pstats.images},
                        {"pairs", pstats.pairs},
                        {"dropped_invalid", pstats.dropped_invalid}};
    summary["splits"] = {{"train", splits.train.size()},
                         {"align", splits.align.size()},
                         {"eval", splits.eval.size()}};
    write_text(cfg.artifact("ingest_summary.json"), summary.dump(2) + "\n");

    out << "ingest: " << astats.input << " raw records, " << astats.retained
        << " after availability, " << qualified.size() << " after quality\n";
    out << "ingest: " << pstats.pairs << " pairs (train " << splits.train.size() << ", align "
        << splits.align.size() << ", eval " << splits.eval.size() << ")";
    if (pstats.dropped_invalid > 0) out << ", " << pstats.dropped_invalid << " dropped";
    out << "\n";
    out << "ingest: descriptions degraded for " << degraded << " of " << qualified.size()
        << " records\n";
    out << "run directory: " << cfg.run_dir().string() << "\n";
    return 0;
}

int cmd_train_sft(const RunConfig& cfg, std::ostream& out) {
    const Registry registry = load_registry(cfg.artifact("registry.json"));
    const auto train = load_pairs(cfg.artifact("train.jsonl"));

    std::vector<std::string> models;
    models.reserve(registry.size());
    for (const auto& [name, entry] : registry.entries()) models.push_back(name);
    std::vector<std::string> words;
    for (const auto& p : train) {
        for (auto& w : split_prompt_words(p.instruction.prompt)) words.push_back(std::move(w));
        for (auto& w : split_prompt_words(p.instruction.negative_prompt))
            words.push_back(std::move(w));
    }
    const Vocab vocab = Vocab::build(
        models,
        std::vector<std::string>(registry.sampling_methods().begin(),
                                 registry.sampling_methods().end()),
        words);

    std::vector<TokenPair> dataset;
    dataset.reserve(train.size());
    for (const auto& p : train) dataset.push_back(encode_pair(vocab, p));

    SftConfig scfg;
    scfg.epochs = cfg.sft.epochs;
    scfg.lr = cfg.sft.lr;
    scfg.batch_size = cfg.sft.batch_size;
    scfg.seed = cfg.seed;
    std::vector<SftEpochLog> log;
    PolicyParams params = train_sft(PolicyParams::zeros(vocab.size()), dataset, scfg, &log);

    const fs::path ckpt = cfg.artifact("sft.ckpt");
    ensure_parent(ckpt);
    save_policy_file(ckpt.string(), Policy{vocab, std::move(params)});

    std::vector<nlohmann::json> lines;
    for (const auto& l : log) lines.push_back({{"epoch", l.epoch}, {"mean_loss", l.mean_loss}});
    write_records(cfg.artifact("sft_log.jsonl"), lines);

    out << "train-sft: " << dataset.size() << " pairs, vocab " << vocab.size() << ", "
        << scfg.epochs << " epoch(s)\n";
    if (!log.empty())
        out << "train-sft: first epoch loss " << log.front().mean_loss << ", last "
            << log.back().mean_loss << "\n";
    out << "checkpoint: " << ckpt.string() << "\n";
    return 0;
}

int cmd_align(const RunConfig& cfg, std::ostream& out) {
    const Policy sft = load_policy_file(cfg.artifact("sft.ckpt").string());
    const Registry registry = load_registry(cfg.artifact("registry.json"));
    const auto align_split = load_pairs(cfg.artifact("align.jsonl"));
    const StyleWorld world = make_world(cfg);
    const auto scorer = make_scorer(cfg, world);

    std::vector<AlignEpochLog> log;
    const Policy rrhf = train_rrhf(sft, align_split, registry, world, *scorer, cfg.rrhf, &log);

    const fs::path ckpt = cfg.artifact("rrhf.ckpt");
    ensure_parent(ckpt);
    save_policy_file(ckpt.string(), rrhf);

    std::vector<nlohmann::json> lines;
    for (const auto& l : log) {
        lines.push_back({{"epoch", l.epoch},
                         {"mean_loss", l.mean_loss},
                         {"mean_rank_loss", l.mean_rank_loss},
                         {"mean_ce_loss", l.mean_ce_loss},
                         {"raw_hallucination_rate", l.raw_hallucination_rate},
                         {"mean_best_score", l.mean_best_score}});
    }
    write_records(cfg.artifact("align_log.jsonl"), lines);

    out << "align: " << align_split.size() << " prompts, " << cfg.rrhf.epochs << " epoch(s)\n";
    for (const auto& l : log) {
        out << "align: epoch " << l.epoch << " loss " << l.mean_loss << " (rank "
            << l.mean_rank_loss << ", ce " << l.mean_ce_loss << "), raw hallucination rate "
            << l.raw_hallucination_rate << ", best score " << l.mean_best_score << "\n";
    }
    out << "checkpoint: " << ckpt.string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, bool check, std::ostream& out) {
    const Policy sft = load_policy_file(cfg.artifact("sft.ckpt").string());
    const Policy rrhf = load_policy_file(cfg.artifact("rrhf.ckpt").string());
    const Registry registry = load_registry(cfg.artifact("registry.json"));
    const auto eval_split = load_pairs(cfg.artifact("eval.jsonl"));
    const StyleWorld world = make_world(cfg);
    const auto scorer = make_scorer(cfg, world);

    const std::vector<Variant> variants(kAllVariants.begin(), kAllVariants.end());
    const EvalReport report = evaluate(eval_split, variants, world, *scorer, sft, rrhf, registry,
                                       cfg.eval.n_images, cfg.seed, cfg.jobs);

    write_text(cfg.artifact("report.json"), report_to_json(report).dump(2) + "\n");
    const std::string table = report_to_table(report);
    write_text(cfg.artifact("report.txt"), table);
    out << table;

    if (check) {
        const auto failures = check_directions(report);
        if (!failures.empty()) {
            for (const auto& f : failures) out << "check failed: " << f << "\n";
            return 2;
        }
        out << "all checks passed\n";
    }
    return 0;
}

int cmd_recommend(const RunConfig& cfg, const std::string& prompt, bool record,
                  std::ostream& out) {
    const Policy rrhf = load_policy_file(cfg.artifact("rrhf.ckpt").string());
    const Registry registry = load_registry(cfg.artifact("registry.json"));

    const Instruction instruction{prompt, ""};
    const auto decoded = decode_response(rrhf, instruction, registry);
    const bool hallucinated = !decoded.has_value();
    const T2IApi api = decoded ? *decoded : default_response(registry.most_downloaded());

    if (record) {
        nlohmann::json j;
        j["api"] = serialize_api(api);
        j["hallucinated"] = hallucinated;
        out << j.dump() << "\n";
        return 0;
    }
    if (hallucinated)
        out << "warning: decoded response was not callable; using the default response\n";
    out << "model:            " << api.info.model << "\n";
    out << "type:             " << to_string(api.info.kind) << "\n";
    out << "base model:       " << to_string(api.info.base_model) << "\n";
    out << "width x height:   " << api.params.width << " x " << api.params.height << "\n";
    out << "sampling method:  " << api.params.sampling_method << "\n";
    out << "sampling steps:   " << api.params.sampling_steps << "\n";
    out << "cfg scale:        " << api.params.cfg_scale << "\n";
    if (!api.info.model_description.empty())
        out << "description:      " << api.info.model_description << "\n";
    return 0;
}

} // namespace sdr
