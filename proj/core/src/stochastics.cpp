#include "menkf/stochastics.hpp"

#include "menkf/errors.hpp"

#include <cmath>
#include <numbers>

namespace menkf {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer. Good avalanche, passes practical statistical batteries.
std::uint64_t mix64(std::uint64_t z)
{
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t master_seed, const std::uint64_t* labels, std::size_t n)
{
    std::uint64_t key = mix64(master_seed ^ 0x6D656E6B662D7367ull);
    for (std::size_t i = 0; i < n; ++i)
        key = mix64(key ^ mix64(labels[i]));
    return key;
}

} // namespace

SeededStream::SeededStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> lineage)
    : SeededStream(derive_key(master_seed, lineage.begin(), lineage.size()))
{
}

SeededStream::SeededStream(std::uint64_t master_seed, const std::vector<std::uint64_t>& lineage)
    : SeededStream(derive_key(master_seed, lineage.data(), lineage.size()))
{
}

SeededStream SeededStream::child(std::uint64_t label) const
{
    return SeededStream(mix64(key_ ^ mix64(label)));
}

std::uint64_t SeededStream::next_u64()
{
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double SeededStream::uniform()
{
    // 53 significant bits, shifted into (0, 1] so log() is always defined.
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double SeededStream::standard_normal()
{
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SeededStream::gaussian(double mean, double variance)
{
    if (variance < 0.0)
        throw ContractError("gaussian: negative variance " + std::to_string(variance));
    if (variance == 0.0)
        return mean;
    return mean + std::sqrt(variance) * standard_normal();
}

SeededStream derive_stream(std::uint64_t master_seed, const std::vector<std::uint64_t>& lineage)
{
    return SeededStream(master_seed, lineage);
}

double gaussian(SeededStream& stream, double mean, double variance)
{
    return stream.gaussian(mean, variance);
}

} // namespace menkf
