// SPDX-License-Identifier: Apache-2.0
#include "sdr/fixture.hpp"

#include <algorithm>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "sdr/errors.hpp"

namespace sdr {
namespace {

const std::vector<std::string>& style_pool() {
    static const std::vector<std::string> pool = {
        "pixelart", "watercolor", "cyberpunk", "ukiyoe",   "origami",
        "storybook", "synthwave",  "linocut",   "claymation", "fresco",
    };
    return pool;
}

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

// Pronounceable pseudo-words keep prompts readable without colliding with
// style keywords or model names.
std::vector<std::string> make_filler_pool(std::mt19937_64& rng, size_t count,
                                          const std::set<std::string>& blocked) {
    static const std::vector<std::string> syllables = {
        "ba", "lu", "mi", "to",  "ra", "ven", "ko", "sa",  "ne", "dor",
        "fi", "ga", "po", "zu",  "che", "wi", "mar", "el", "ta", "rin",
    };
    std::set<std::string> seen;
    std::vector<std::string> pool;
    while (pool.size() < count) {
        std::string w;
        const int parts = 2 + static_cast<int>(draw(rng, 2));
        for (int i = 0; i < parts; ++i) w += syllables[draw(rng, syllables.size())];
        if (blocked.count(w) || !seen.insert(w).second) continue;
        pool.push_back(std::move(w));
    }
    return pool;
}

struct ModelPlan {
    std::string name;
    ModelKind kind = ModelKind::Checkpoint;
    double quality = 1.0;
    int style = -1; // -1: uniform affinity
    double affinity = 1.0;
    int images = 0;       // per-style count for the baseline model
    long downloads = 0;
    bool baseline = false;
};

struct ParamPlan {
    int width = 1024;
    int height = 1024;
    std::string method;
    int steps = 20;
    double cfg = 7.0;
};

ParamPlan plan_params(std::mt19937_64& rng, const std::vector<std::string>& methods) {
    static const int dims[] = {512, 768, 1024};
    static const int steps[] = {20, 25, 30, 40};
    static const double cfgs[] = {5.0, 7.0, 9.0};
    ParamPlan p;
    p.width = dims[draw(rng, 3)];
    p.height = dims[draw(rng, 3)];
    p.method = methods[draw(rng, methods.size())];
    p.steps = steps[draw(rng, 4)];
    p.cfg = cfgs[draw(rng, 3)];
    return p;
}

std::string make_prompt(std::mt19937_64& rng, const std::string& style,
                        const std::vector<std::string>& fillers) {
    const int n_fillers = 3 + static_cast<int>(draw(rng, 4));
    const size_t style_pos = draw(rng, 3); // style keyword near the front
    std::vector<std::string> words;
    for (int i = 0; i < n_fillers; ++i) words.push_back(fillers[draw(rng, fillers.size())]);
    words.insert(words.begin() + static_cast<long>(std::min(style_pos, words.size())), style);
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

RawImageRecord make_image(std::mt19937_64& rng, const ParamPlan& canon, const std::string& style,
                          const std::vector<std::string>& fillers,
                          const std::vector<std::string>& negatives, bool always_exact) {
    RawImageRecord img;
    img.prompt = make_prompt(rng, style, fillers);
    if (draw(rng, 4) == 0) {
        img.negative_prompt = negatives[draw(rng, negatives.size())];
        if (draw(rng, 2) == 0) img.negative_prompt += " " + negatives[draw(rng, negatives.size())];
    }
    const std::uint64_t roll = always_exact ? 0 : draw(rng, 100);
    if (roll < 80) {
        img.width = canon.width;
        img.height = canon.height;
        img.sampling_method = canon.method;
        img.sampling_steps = canon.steps;
        img.cfg_scale = canon.cfg;
    } else if (roll < 92) {
        // Slightly off-grid uploads, still schema-valid (multiples of 8);
        // snapping recovers the canonical values.
        img.width = canon.width + 8 * (static_cast<int>(draw(rng, 5)) - 2);
        img.height = canon.height + 8 * (static_cast<int>(draw(rng, 5)) - 2);
        img.sampling_method = canon.method;
        img.sampling_steps = canon.steps + static_cast<int>(draw(rng, 5)) - 2;
        img.cfg_scale = canon.cfg + (static_cast<double>(draw(rng, 17)) - 8.0) / 10.0;
    } else {
        // Sparse uploads: some fields missing entirely.
        switch (draw(rng, 3)) {
            case 0:
                img.sampling_method = canon.method;
                img.sampling_steps = canon.steps;
                img.cfg_scale = canon.cfg;
                break;
            case 1:
                img.width = canon.width;
                img.height = canon.height;
                img.cfg_scale = canon.cfg;
                break;
            default:
                img.width = canon.width;
                img.height = canon.height;
                img.sampling_method = canon.method;
                break;
        }
    }
    return img;
}

} // namespace

Fixture make_demo_fixture(const FixtureOptions& opt) {
    if (opt.n_styles < 1 || opt.n_styles > static_cast<int>(style_pool().size()))
        throw Error("fixture n_styles must be within 1.." + std::to_string(style_pool().size()));
    const int S = opt.n_styles;
    std::mt19937_64 rng(opt.seed);

    std::vector<std::string> styles(style_pool().begin(), style_pool().begin() + S);
    std::set<std::string> blocked(styles.begin(), styles.end());
    const std::vector<std::string> fillers = make_filler_pool(rng, 160, blocked);
    const std::vector<std::string> negatives = {"blurry",    "lowres",       "deformed",
                                                "watermark", "oversaturated", "grainy"};
    std::vector<std::string> methods;
    for (const auto& m : default_sampling_methods()) methods.push_back(m);

    // Model layout: one baseline, two or three specialists per style, a few
    // barely-used experimental models.
    std::vector<ModelPlan> plans;
    plans.push_back({"vanilla-base", ModelKind::Checkpoint, 0.8, -1, 1.0, 8, 120000, true});
    for (int s = 0; s < S; ++s) {
        const std::string& st = styles[static_cast<size_t>(s)];
        switch (s % 3) {
            case 0: // conflicted: the best model is a LoRA, but checkpoints cast
                    // the majority of type votes for this style's prompts
                plans.push_back({st + "-lora", ModelKind::LoRA, 1.0, s, 1.0, 52, 30000, false});
                plans.push_back({st + "-prime", ModelKind::Checkpoint, 0.84, s, 1.0, 33, 20000, false});
                plans.push_back({st + "-classic", ModelKind::Checkpoint, 0.78, s, 1.0, 33, 15000, false});
                break;
            case 1: // spread: three checkpoints, popular one best, a long tail
                plans.push_back({st + "-classic", ModelKind::Checkpoint, 1.0, s, 1.0, 46, 25000, false});
                plans.push_back({st + "-prime", ModelKind::Checkpoint, 0.85, s, 1.0, 27, 18000, false});
                plans.push_back({st + "-lite", ModelKind::Checkpoint, 0.76, s, 1.0, 19, 6000, false});
                break;
            default: // clean: dominant high-quality checkpoint
                plans.push_back({st + "-prime", ModelKind::Checkpoint, 1.0, s, 1.0, 56, 40000, false});
                plans.push_back({st + "-lite", ModelKind::Checkpoint, 0.8, s, 1.0, 25, 9000, false});
                break;
        }
    }
    const int n_extras = std::min(4, S);
    for (int i = 0; i < n_extras; ++i) {
        plans.push_back({"lab-" + styles[static_cast<size_t>(i)], ModelKind::Checkpoint, 0.7, i,
                         0.5, 2, 700, false});
    }

    Fixture fx;
    fx.world.styles = styles;
    fx.world.embedding_dim = S + 2;
    fx.world.noise_amplitude = opt.noise_amplitude;

    int ordinal = 0;
    for (const auto& plan : plans) {
        StyleWorldModel wm;
        wm.name = plan.name;
        wm.affinity.assign(static_cast<size_t>(S), 0.0);
        if (plan.style < 0) {
            for (double& a : wm.affinity) a = 1.0 / static_cast<double>(S);
        } else {
            wm.affinity[static_cast<size_t>(plan.style)] = plan.affinity;
        }
        wm.quality = plan.quality;
        fx.world.models.push_back(std::move(wm));

        RawModelRecord rec;
        {
            std::ostringstream id;
            id << "m-" << std::setw(2) << std::setfill('0') << ordinal++;
            rec.id = id.str();
        }
        rec.name = plan.name;
        rec.kind_str = to_string(plan.kind);
        rec.arch_str = to_string(ArchitectureFamily::SDXL);
        rec.file_hashes = {"h-" + plan.name};
        rec.download_count = plan.downloads + static_cast<long>(draw(rng, 500));
        rec.rating_count = 60 + static_cast<long>(draw(rng, 300));
        rec.rating = 4.1 + 0.08 * static_cast<double>(draw(rng, 10));
        rec.baseline = plan.baseline;
        if (plan.style < 0) {
            rec.description = "General purpose base model.";
        } else {
            rec.description =
                "Fine-tuned for " + styles[static_cast<size_t>(plan.style)] + " imagery.";
        }

        const ParamPlan canon = plan_params(rng, methods);
        const bool tiny = plan.images <= 2;
        if (plan.style < 0) {
            for (int s = 0; s < S; ++s) {
                for (int i = 0; i < plan.images; ++i) {
                    rec.sample_images.push_back(make_image(rng, canon, styles[static_cast<size_t>(s)],
                                                           fillers, negatives, tiny));
                }
            }
        } else {
            const std::string& st = styles[static_cast<size_t>(plan.style)];
            for (int i = 0; i < plan.images; ++i) {
                RawImageRecord img = make_image(rng, canon, st, fillers, negatives, tiny);
                if (plan.kind == ModelKind::LoRA) {
                    // Alternate between the two hash-resolution channels, and
                    // let half the prompts carry the tag syntax users paste in.
                    const size_t idx = rec.sample_images.size();
                    if (idx % 2 == 0) {
                        img.base_model_hash = "h-vanilla-base";
                    } else {
                        rec.base_model_hash_map[std::to_string(idx)] = "h-vanilla-base";
                    }
                    if (draw(rng, 2) == 0)
                        img.prompt = "<lora:" + plan.name + ":0.8> " + img.prompt;
                }
                rec.sample_images.push_back(std::move(img));
            }
        }
        fx.records.push_back(std::move(rec));
    }
    return fx;
}

} // namespace sdr
