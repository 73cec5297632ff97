#ifndef GEOPAS_COMMON_HPP
#define GEOPAS_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geopas {

// Exit-code mapping in the CLI: config_error -> 2, data_error -> 3.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Counter-based 64-bit generator (SplitMix64, Steele et al. 2014).
// The state advances by a fixed odd gamma and the output is a bijective
// mix of the state, so the stream is a pure function of (seed, counter).
// split() derives an independent child stream from a stream id, which is
// what makes per-slice / per-fold / per-datapoint parallelism reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller, second draw cached; deterministic per stream
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    Rng split(std::uint64_t stream_id) const {
        return Rng(mix(state_ ^ mix(stream_id + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t state() const { return state_; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Fixed mixing of identifiers into a stream seed; shared by the suite
// (per-instance transforms) and the dataset generator (per-datapoint probes).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t h = Rng::mix(base ^ 0x8f1bbcdcbfa53e0bULL);
    h = Rng::mix(h ^ (a * 0x2545f4914f6cdd1dULL));
    h = Rng::mix(h ^ (b * 0x9e6c63d0876a9a47ULL));
    h = Rng::mix(h ^ (c * 0xd1342543de82ef95ULL));
    return h;
}

// Quantile with linear interpolation between order statistics, q in [0, 1].
// This one convention is shared by the slice IQR, the SBS q90 and all
// reported percentiles, so e.g. quantile({1..10}, 0.9) == 9.1.
inline double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw input_error("quantile of empty list");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw input_error("mean of empty list");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

// FNV-1a, used for config/content hashes embedded in manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace geopas

#endif
