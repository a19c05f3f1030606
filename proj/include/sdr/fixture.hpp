// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sdr/catalog.hpp"
#include "sdr/styleworld.hpp"

namespace sdr {

struct FixtureOptions {
    int n_styles = 6; // 1..10, styles drawn from a fixed keyword pool
    std::uint64_t seed = 7;
    double noise_amplitude = 0.02;
};

// A self-consistent synthetic universe: the world description that scores and
// generates, plus the raw catalog records a provider dump would contain for
// the same models. Ingesting the records against the world reproduces the
// full pipeline end to end without any external service.
struct Fixture {
    StyleWorldSpec world;
    std::vector<RawModelRecord> records;
};

// Deterministic in (n_styles, seed): repeated calls yield identical fixtures.
//
// Layout per style, cycling through three shapes:
//  - "conflicted": the style's best model is a popular LoRA, but the style's
//    checkpoints cast the majority of type votes. Imitation learning pulls
//    the model choice toward the LoRA and the type choice toward
//    "Checkpoint", so a purely supervised policy emits inconsistent
//    responses for these prompts; preference training has to repair them.
//  - "spread": three checkpoints with the popular one best and a long tail.
//  - "clean": a dominant high-quality checkpoint (easy case).
// Plus a handful of barely-used experimental models and one general-purpose
// baseline model that is also the most downloaded.
Fixture make_demo_fixture(const FixtureOptions& opt = {});

} // namespace sdr
