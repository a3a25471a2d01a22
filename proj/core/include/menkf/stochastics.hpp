#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace menkf {

/// Deterministic, splittable Gaussian random stream.
///
/// A stream is a pure function of (master_seed, lineage): the same pair always
/// reproduces the same sample sequence, and streams with distinct lineages are
/// statistically independent. Lineage labels typically encode member index,
/// model-step index and a role tag, so every noise source in an experiment has
/// its own stream and ensemble members can be advanced in any order (or in
/// parallel) without touching shared RNG state.
class SeededStream {
public:
    SeededStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> lineage);
    SeededStream(std::uint64_t master_seed, const std::vector<std::uint64_t>& lineage);

    /// New stream with one more lineage label appended.
    SeededStream child(std::uint64_t label) const;

    /// Next raw 64-bit word.
    std::uint64_t next_u64();

    /// Uniform deviate in (0, 1].
    double uniform();

    /// Sample from N(mean, variance). variance == 0 returns mean exactly and
    /// consumes nothing; negative variance is a precondition violation.
    double gaussian(double mean, double variance);

    /// Standard normal via Box-Muller.
    double standard_normal();

private:
    explicit SeededStream(std::uint64_t key) : state_(key), key_(key) {}

    std::uint64_t state_;
    std::uint64_t key_; // derivation key, kept so child() extends the lineage, not the state
};

/// Build a stream from a master seed and a lineage label list.
SeededStream derive_stream(std::uint64_t master_seed, const std::vector<std::uint64_t>& lineage);

/// Sample from N(mean, variance) using the given stream.
double gaussian(SeededStream& stream, double mean, double variance);

} // namespace menkf
