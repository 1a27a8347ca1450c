#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrb {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent streams within one scenario.
enum class Stream : std::uint64_t { design = 1, model = 2, noise = 3, aux = 4 };

/// Seed for replication `rep` of `scenario_id` on `stream`.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view scenario_id, Stream stream,
                                 std::uint64_t rep = 0)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(scenario_id));
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return splitmix64(h ^ rep);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
    std::uint64_t next() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace lrb
