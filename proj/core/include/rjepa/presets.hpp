#pragma once

#include <cstdint>

#include "rjepa/data.hpp"

namespace rjepa {

// Canned data recipes shared by the CLI, the tests, and the benchmarks so
// every consumer drives the exact same distributions.

// Mixed-timescale latents: a few slow, high-amplitude dimensions (nearly
// fully predictable one step ahead) plus fast low-amplitude ones. Each slow
// dimension is paired with a white latent sharing its emission column, so a
// single patch shows signal + noise mixed; only temporal averaging separates
// them. That is the gap a smoothing cell can close, and what makes late-t
// prediction visibly better than early-t once memory is learned.
// rho_slow keeps the slow time constant well under the generator's 100-step
// burn-in, so the emitted sequences really are stationary
LatentProcessParams predictable_process(int patch_dim = 32, int slow = 6, int fast = 6,
                                        double rho_slow = 0.98, double rho_fast = 0.1,
                                        double amp_slow = 2.0, double amp_fast = 0.5,
                                        double obs_noise = 1.0, std::uint64_t seed = 7);

// Variance-normalized anisotropic latents for the collapse experiment: every
// dimension has unit stationary variance (so the feature spectrum starts
// flat), but only `slow` of them are predictable. Without the stop-gradient
// the embedding can shrink the unpredictable ones; participation ratio then
// falls toward `slow`.
LatentProcessParams collapse_process(int patch_dim = 64, int latent = 48, int slow = 3,
                                     double rho_slow = 0.99, double rho_fast_lo = 0.2,
                                     double rho_fast_hi = 0.6, std::uint64_t seed = 11);

// White noise straight into the patch (identity emission, U = 0) — the
// zero-memory input the linear-testbed analysis assumes.
LatentProcessParams white_process(int dim);

// index_offset keys per-sequence noise substreams; pass the training count as
// the offset of the evaluation split to keep the two disjoint.
SequenceDataset preset_dataset(const LatentProcessParams& params, int count, int T,
                               std::uint64_t seed, std::uint64_t index_offset = 0);

}  // namespace rjepa
