#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkdpost {

// Unit conventions used throughout: timestamps in integer picoseconds,
// durations in seconds, losses in dB, angles in degrees, distances in km
// unless a name says otherwise.

/// Detector channel of the four-detector passive polarization analyzer.
/// H/V span the Z basis, D/A span the X basis.
enum class Channel : std::uint8_t { H = 0, V = 1, D = 2, A = 3 };

enum class Basis : std::uint8_t { Z = 0, X = 1 };

enum class Party : std::uint8_t { Alice = 0, Bob = 1 };

inline Basis basis_of(Channel c) {
    return (c == Channel::H || c == Channel::V) ? Basis::Z : Basis::X;
}

inline const char* to_string(Channel c) {
    switch (c) {
        case Channel::H: return "H";
        case Channel::V: return "V";
        case Channel::D: return "D";
        case Channel::A: return "A";
    }
    return "?";
}

/// One detection: picoseconds since the stream epoch plus the detector that fired.
struct DetectionEvent {
    std::int64_t timestamp_ps = 0;
    Channel channel = Channel::H;

    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

inline bool event_order(const DetectionEvent& a, const DetectionEvent& b) {
    if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
    return static_cast<std::uint8_t>(a.channel) < static_cast<std::uint8_t>(b.channel);
}

/// Time-ordered detection record of one party.
///
/// Invariants: events sorted non-decreasing by timestamp, no duplicate
/// (timestamp, channel) pairs, timestamps >= 0.
struct TimeTagStream {
    Party party = Party::Alice;
    std::string epoch_label;
    std::vector<DetectionEvent> events;

    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }

    /// Span between first and last event in seconds (0 for < 2 events).
    double span_s() const;

    /// Sorts by (timestamp, channel) and drops exact duplicates.
    void normalize();

    /// Throws std::invalid_argument if an invariant is violated.
    void validate() const;
};

/// Composable security budget and the fixed protocol constants.
struct SecurityParams {
    double epsilon_total = 4e-16;
    double epsilon_pe = 4e-16 / 3.0;
    double epsilon_sec = 4e-16 / 3.0;
    double epsilon_cor = 4e-16 / 3.0;
    double f_ec = 1.2;            // error-correction efficiency, >= 1
    double sample_fraction = 0.20;  // share of sifted pairs spent on QBER estimation

    void validate() const;
};

/// Equal three-way split of the total security parameter.
SecurityParams split_epsilon(double epsilon_total);

/// Round-half-up count of parameter-estimation pairs for a block of n_total.
std::uint64_t parameter_estimation_count(std::uint64_t n_total, double sample_fraction);

/// Basis-matched coincidence statistics for one aggregation window.
struct SiftedBlock {
    double t_start_s = 0.0;     // block start, Alice clock
    double duration_s = 0.0;
    std::uint64_t n_total = 0;  // sifted pairs in the block
    std::uint64_t n_pe = 0;     // pairs consumed by parameter estimation
    std::uint64_t n_key = 0;    // pairs left for key generation
    std::uint64_t n_mismatch = 0;  // errors observed on the sampled pairs
    double qber_hat = 0.0;

    static SiftedBlock from_counts(double t_start_s, double duration_s,
                                   std::uint64_t n_total, std::uint64_t n_pe,
                                   std::uint64_t n_mismatch);

    void validate() const;
};

/// Binary entropy h(x) = -x log2 x - (1-x) log2(1-x); h(0) = h(1) = 0.
/// Throws std::domain_error outside [0, 1].
double binary_entropy(double x);

/// Deterministic xoshiro256++ generator seeded through splitmix64.
///
/// All Monte Carlo output in this project must come from this generator so
/// that a run is reproducible bit for bit from a single 64-bit seed on any
/// platform. The standard-library distributions are unspecified across
/// implementations and must not be used.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n), rejection-sampled, n >= 1.
    std::uint64_t uniform_below(std::uint64_t n);

    bool bernoulli(double p);

    /// Exponential inter-arrival time with the given rate (events per unit time).
    double exponential(double rate);

    /// Box-Muller normal deviate.
    double gaussian(double mean, double sigma);

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qkdpost
