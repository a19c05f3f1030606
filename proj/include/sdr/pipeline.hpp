// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "sdr/run_config.hpp"

namespace sdr {

// Command implementations behind the CLI. Each one composes with the others
// through files only, validates every input before writing any output, and is
// byte-identical across reruns with the same config. Human-readable progress
// goes to `out`; errors are thrown (the CLI maps them to nonzero exits).

// Raw records -> registry + train/align/eval splits + ingestion summary.
int cmd_ingest(const RunConfig& cfg, std::ostream& out);

// Train split -> supervised checkpoint + per-epoch loss log.
int cmd_train_sft(const RunConfig& cfg, std::ostream& out);

// SFT checkpoint + align split -> preference-tuned checkpoint + run log.
int cmd_align(const RunConfig& cfg, std::ostream& out);

// Checkpoints + eval split -> report files; with check=true, nonzero exit
// when any expected metric direction fails.
int cmd_evaluate(const RunConfig& cfg, bool check, std::ostream& out);

// One prompt -> printed API response (total: falls back to the default
// response with a warning when the decode hallucinates).
int cmd_recommend(const RunConfig& cfg, const std::string& prompt, bool record, std::ostream& out);

} // namespace sdr
