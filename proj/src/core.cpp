#include "qkdpost/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace qkdpost {

double TimeTagStream::span_s() const {
    if (events.size() < 2) return 0.0;
    return static_cast<double>(events.back().timestamp_ps - events.front().timestamp_ps) * 1e-12;
}

void TimeTagStream::normalize() {
    std::sort(events.begin(), events.end(), event_order);
    events.erase(std::unique(events.begin(), events.end()), events.end());
}

void TimeTagStream::validate() const {
    std::int64_t prev = -1;
    Channel prev_ch = Channel::H;
    for (const auto& e : events) {
        if (e.timestamp_ps < 0)
            throw std::invalid_argument("TimeTagStream: negative timestamp");
        if (e.timestamp_ps < prev)
            throw std::invalid_argument("TimeTagStream: timestamps not sorted");
        if (e.timestamp_ps == prev && e.channel == prev_ch)
            throw std::invalid_argument("TimeTagStream: duplicate (timestamp, channel)");
        prev = e.timestamp_ps;
        prev_ch = e.channel;
    }
}

void SecurityParams::validate() const {
    if (!(epsilon_total > 0.0) || !(epsilon_pe > 0.0) || !(epsilon_sec > 0.0) ||
        !(epsilon_cor > 0.0))
        throw std::domain_error("SecurityParams: epsilon components must be positive");
    const double sum = epsilon_pe + epsilon_sec + epsilon_cor;
    if (std::abs(sum - epsilon_total) > 4.0 * std::numeric_limits<double>::epsilon() * epsilon_total)
        throw std::domain_error("SecurityParams: epsilon split does not sum to total");
    if (f_ec < 1.0) throw std::domain_error("SecurityParams: f_ec must be >= 1");
    if (!(sample_fraction > 0.0) || !(sample_fraction < 1.0))
        throw std::domain_error("SecurityParams: sample_fraction must be in (0,1)");
}

SecurityParams split_epsilon(double epsilon_total) {
    if (!(epsilon_total > 0.0))
        throw std::domain_error("split_epsilon: epsilon_total must be positive");
    SecurityParams p;
    p.epsilon_total = epsilon_total;
    p.epsilon_pe = epsilon_total / 3.0;
    p.epsilon_sec = epsilon_total / 3.0;
    p.epsilon_cor = epsilon_total / 3.0;
    return p;
}

std::uint64_t parameter_estimation_count(std::uint64_t n_total, double sample_fraction) {
    return static_cast<std::uint64_t>(std::floor(sample_fraction * static_cast<double>(n_total) + 0.5));
}

SiftedBlock SiftedBlock::from_counts(double t_start_s, double duration_s,
                                     std::uint64_t n_total, std::uint64_t n_pe,
                                     std::uint64_t n_mismatch) {
    SiftedBlock b;
    b.t_start_s = t_start_s;
    b.duration_s = duration_s;
    b.n_total = n_total;
    b.n_pe = n_pe;
    b.n_key = n_total - n_pe;
    b.n_mismatch = n_mismatch;
    b.qber_hat = n_pe > 0 ? static_cast<double>(n_mismatch) / static_cast<double>(n_pe) : 0.0;
    b.validate();
    return b;
}

void SiftedBlock::validate() const {
    if (n_pe + n_key != n_total)
        throw std::invalid_argument("SiftedBlock: n_pe + n_key != n_total");
    if (n_mismatch > n_pe)
        throw std::invalid_argument("SiftedBlock: more mismatches than sampled pairs");
    if (qber_hat < 0.0 || qber_hat > 1.0)
        throw std::invalid_argument("SiftedBlock: qber_hat outside [0,1]");
    if (duration_s < 0.0)
        throw std::invalid_argument("SiftedBlock: negative duration");
}

double binary_entropy(double x) {
    if (!(x >= 0.0) || !(x <= 1.0))
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) throw std::domain_error("Rng::uniform_below: n must be >= 1");
    const std::uint64_t threshold = -n % n;  // reject to remove modulo bias
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

double Rng::exponential(double rate) {
    if (!(rate > 0.0)) throw std::domain_error("Rng::exponential: rate must be positive");
    // -log(1 - u) keeps the argument away from 0 since u is in [0,1)
    return -std::log1p(-uniform()) / rate;
}

double Rng::gaussian(double mean, double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + sigma * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return mean + sigma * r * std::cos(two_pi * u2);
}

}  // namespace qkdpost
