#include "qkdpost/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qkdpost {

std::vector<CoincidencePair> find_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                               const SyncResult& sync, std::int64_t window_ps) {
    if (window_ps < 0) throw std::invalid_argument("find_coincidences: negative window");

    std::vector<CoincidencePair> pairs;
    if (a.empty() || b.empty()) return pairs;

    // Bob's aligned times are non-decreasing because the clock map is affine
    // with positive slope.
    std::vector<std::int64_t> tb(b.events.size());
    for (std::size_t j = 0; j < b.events.size(); ++j)
        tb[j] = align_timestamp(b.events[j].timestamp_ps, sync);

    std::vector<bool> used(b.events.size(), false);
    std::size_t lo = 0;
    pairs.reserve(std::min(a.size(), b.size()) / 2);

    for (const auto& ea : a.events) {
        const std::int64_t ta = ea.timestamp_ps;
        while (lo < tb.size() && (tb[lo] < ta - window_ps || used[lo])) ++lo;

        std::size_t best = tb.size();
        std::int64_t best_abs = window_ps + 1;
        for (std::size_t j = lo; j < tb.size() && tb[j] <= ta + window_ps; ++j) {
            if (used[j]) continue;
            const std::int64_t d = tb[j] - ta;
            const std::int64_t ad = d < 0 ? -d : d;
            if (ad < best_abs) {  // strict: keeps the earlier Bob event on ties
                best_abs = ad;
                best = j;
            }
        }
        if (best == tb.size()) continue;
        used[best] = true;
        pairs.push_back({ta, tb[best], ea.channel, b.events[best].channel,
                         basis_of(ea.channel) == basis_of(b.events[best].channel)});
    }
    return pairs;
}

namespace {

std::uint8_t alice_bit(Channel c) {
    switch (c) {
        case Channel::H: return 0;
        case Channel::V: return 1;
        case Channel::D: return 0;
        case Channel::A: return 1;
    }
    return 0;
}

std::uint8_t bob_bit(Channel c) {
    switch (c) {
        case Channel::H: return 0;
        case Channel::V: return 1;
        case Channel::D: return 1;  // X-basis flip for the anti-correlated state
        case Channel::A: return 0;
    }
    return 0;
}

}  // namespace

std::vector<BitPair> sift(const std::vector<CoincidencePair>& pairs) {
    std::vector<BitPair> bits;
    bits.reserve(pairs.size() / 2);
    for (const auto& p : pairs) {
        if (!p.basis_match) continue;
        bits.push_back({alice_bit(p.ch_alice), bob_bit(p.ch_bob)});
    }
    return bits;
}

std::pair<QberEstimate, std::vector<BitPair>> estimate_qber(const std::vector<BitPair>& sifted,
                                                            const SecurityParams& params,
                                                            std::uint64_t rng_seed) {
    const std::uint64_t n = sifted.size();
    if (n < 10) throw InsufficientDataError("estimate_qber: fewer than 10 sifted pairs");

    const std::uint64_t n_pe = parameter_estimation_count(n, params.sample_fraction);

    // partial Fisher-Yates: the first n_pe slots become the sample
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(rng_seed);
    for (std::uint64_t i = 0; i < n_pe && i + 1 < n; ++i) {
        const std::uint64_t j = i + rng.uniform_below(n - i);
        std::swap(idx[i], idx[j]);
    }

    std::uint64_t mismatches = 0;
    for (std::uint64_t i = 0; i < n_pe; ++i) {
        const BitPair& p = sifted[idx[i]];
        if (p.alice != p.bob) ++mismatches;
    }

    QberEstimate est;
    est.n_sampled = n_pe;
    est.qber_hat = n_pe > 0 ? static_cast<double>(mismatches) / static_cast<double>(n_pe) : 0.0;
    est.ci_half_width =
        n_pe > 0 ? std::sqrt(est.qber_hat * (1.0 - est.qber_hat) / static_cast<double>(n_pe))
                 : 0.0;

    std::vector<BitPair> key_bits;
    key_bits.reserve(n - n_pe);
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_pe), idx.end());
    for (std::uint64_t i = n_pe; i < n; ++i) key_bits.push_back(sifted[idx[i]]);
    return {est, std::move(key_bits)};
}

std::vector<SiftedBlock> process_blocks(const std::vector<CoincidencePair>& pairs,
                                        double block_s, const SecurityParams& params,
                                        std::uint64_t master_seed) {
    if (!(block_s > 0.0)) throw std::invalid_argument("process_blocks: block width must be positive");
    std::vector<SiftedBlock> blocks;
    if (pairs.empty()) return blocks;

    const std::int64_t block_ps = static_cast<std::int64_t>(block_s * 1e12);
    std::size_t i = 0;
    while (i < pairs.size()) {
        const std::int64_t block_index = pairs[i].t_alice_ps / block_ps;
        const std::int64_t lo = block_index * block_ps;
        const std::int64_t hi = lo + block_ps;

        std::vector<CoincidencePair> in_block;
        while (i < pairs.size() && pairs[i].t_alice_ps < hi) in_block.push_back(pairs[i++]);

        const std::vector<BitPair> bits = sift(in_block);
        SiftedBlock blk;
        blk.t_start_s = static_cast<double>(lo) * 1e-12;
        blk.duration_s = block_s;
        blk.n_total = bits.size();
        if (bits.size() >= 10) {
            const std::uint64_t seed = master_seed ^ static_cast<std::uint64_t>(block_index);
            auto [est, key] = estimate_qber(bits, params, seed);
            blk.n_pe = est.n_sampled;
            blk.n_key = blk.n_total - blk.n_pe;
            blk.n_mismatch = static_cast<std::uint64_t>(
                std::llround(est.qber_hat * static_cast<double>(est.n_sampled)));
            blk.qber_hat = est.qber_hat;
        } else {
            blk.n_pe = 0;
            blk.n_key = blk.n_total;
            blk.n_mismatch = 0;
            blk.qber_hat = 0.0;
        }
        blocks.push_back(blk);
    }
    return blocks;
}

std::vector<SiftedBlock> aggregate_blocks(const std::vector<SiftedBlock>& blocks,
                                          double window_s) {
    if (!(window_s > 0.0))
        throw std::invalid_argument("aggregate_blocks: window must be positive");
    std::vector<SiftedBlock> out;
    if (blocks.empty()) return out;

    std::size_t i = 0;
    while (i < blocks.size()) {
        const double win_index = std::floor(blocks[i].t_start_s / window_s);
        const double lo = win_index * window_s;
        const double hi = lo + window_s;

        SiftedBlock agg;
        agg.t_start_s = lo;
        while (i < blocks.size() && blocks[i].t_start_s < hi) {
            agg.n_total += blocks[i].n_total;
            agg.n_pe += blocks[i].n_pe;
            agg.n_key += blocks[i].n_key;
            agg.n_mismatch += blocks[i].n_mismatch;
            agg.duration_s += blocks[i].duration_s;
            ++i;
        }
        agg.qber_hat = agg.n_pe > 0
                           ? static_cast<double>(agg.n_mismatch) / static_cast<double>(agg.n_pe)
                           : 0.0;
        out.push_back(agg);
    }
    return out;
}

}  // namespace qkdpost
