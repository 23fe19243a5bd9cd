#include "qkdpost/sync.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <vector>

namespace qkdpost {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex g_fftw_planner_mutex;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Circular cross-correlation C[L] = sum_m a[m] * b[(m + L) mod M] via r2c FFT.
std::vector<double> circular_cross_correlation(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    const std::size_t m = a.size();
    const std::size_t nc = m / 2 + 1;
    std::vector<std::complex<double>> fa(nc), fb(nc);
    std::vector<double> in(m), out(m);

    {
        std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
        fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), in.data(),
                                             reinterpret_cast<fftw_complex*>(fa.data()),
                                             FFTW_ESTIMATE);
        std::copy(a.begin(), a.end(), in.begin());
        fftw_execute(fwd);
        std::copy(b.begin(), b.end(), in.begin());
        fftw_execute_dft_r2c(fwd, in.data(), reinterpret_cast<fftw_complex*>(fb.data()));
        fftw_destroy_plan(fwd);

        for (std::size_t i = 0; i < nc; ++i) fa[i] = std::conj(fa[i]) * fb[i];

        fftw_plan bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m),
                                             reinterpret_cast<fftw_complex*>(fa.data()),
                                             out.data(), FFTW_ESTIMATE);
        fftw_execute(bwd);
        fftw_destroy_plan(bwd);
    }

    const double scale = 1.0 / static_cast<double>(m);
    for (auto& v : out) v *= scale;
    return out;
}

struct Peak {
    std::size_t index = 0;
    double value = 0.0;
    double significance = 0.0;
    double background_mean = 0.0;
};

/// Peak and its significance over the mean of the remaining bins. Bins within
/// +/- exclude of the peak are left out of the background estimate.
Peak peak_significance(const std::vector<double>& c, const std::vector<std::size_t>& lags,
                       std::size_t exclude) {
    Peak peak;
    bool first = true;
    for (std::size_t L : lags) {
        if (first || c[L] > peak.value) {
            peak.index = L;
            peak.value = c[L];
            first = false;
        }
    }
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    const std::size_t m = c.size();
    for (std::size_t L : lags) {
        const std::size_t dist = std::min((L - peak.index + m) % m, (peak.index - L + m) % m);
        if (dist <= exclude) continue;
        sum += c[L];
        sum2 += c[L] * c[L];
        ++n;
    }
    if (n < 8) {
        peak.significance = 0.0;
        return peak;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    const double sigma = std::sqrt(var);
    peak.background_mean = mean;
    if (sigma == 0.0)
        peak.significance = peak.value > mean ? std::numeric_limits<double>::infinity() : 0.0;
    else
        peak.significance = (peak.value - mean) / sigma;
    return peak;
}

// Coarse stage slice length. A short slice keeps an unknown drift's smear to
// a few bins (5 ppm over 2 s = 10 us) while still collecting ~1e5
// coincidences at the rates of interest.
constexpr std::int64_t kCoarseSliceSpanPs = 2'000'000'000'000;  // 2 s

struct CoarseResult {
    std::int64_t offset_ps = 0;
    double significance = 0.0;
};

/// Folded-histogram correlation of the slices [a_begin, a_end) x shifted b.
/// b timestamps are taken relative to (a events' origin + pre_shift), so the
/// returned offset is pre_shift + peak lag.
CoarseResult coarse_correlate(const std::vector<DetectionEvent>& a,
                              const std::vector<DetectionEvent>& b, std::int64_t a_lo,
                              std::int64_t a_hi, std::int64_t pre_shift,
                              std::int64_t bin_width_ps, std::int64_t search_span_ps) {
    const std::size_t span_bins = static_cast<std::size_t>(search_span_ps / bin_width_ps);
    const std::size_t m = next_pow2(2 * span_bins + 2);
    const std::int64_t modulus = static_cast<std::int64_t>(m) * bin_width_ps;

    std::vector<double> ha(m, 0.0), hb(m, 0.0);
    auto fold = [&](std::int64_t t) {
        std::int64_t r = t % modulus;
        if (r < 0) r += modulus;
        return static_cast<std::size_t>(r / bin_width_ps);
    };

    auto a_first = std::lower_bound(a.begin(), a.end(), a_lo,
                                    [](const DetectionEvent& e, std::int64_t v) {
                                        return e.timestamp_ps < v;
                                    });
    std::size_t na = 0;
    for (auto it = a_first; it != a.end() && it->timestamp_ps < a_hi; ++it, ++na)
        ha[fold(it->timestamp_ps - a_lo)] += 1.0;

    const std::int64_t b_lo = a_lo + pre_shift - search_span_ps;
    const std::int64_t b_hi = a_hi + pre_shift + search_span_ps;
    auto b_first = std::lower_bound(b.begin(), b.end(), b_lo,
                                    [](const DetectionEvent& e, std::int64_t v) {
                                        return e.timestamp_ps < v;
                                    });
    std::size_t nb = 0;
    for (auto it = b_first; it != b.end() && it->timestamp_ps < b_hi; ++it, ++nb)
        hb[fold(it->timestamp_ps - a_lo - pre_shift)] += 1.0;

    if (na == 0 || nb == 0) return {};

    const std::vector<double> corr = circular_cross_correlation(ha, hb);

    std::vector<std::size_t> lags;
    lags.reserve(2 * span_bins + 1);
    for (std::size_t L = 0; L <= span_bins; ++L) lags.push_back(L);
    for (std::size_t L = m - span_bins; L < m; ++L) lags.push_back(L);

    const Peak peak = peak_significance(corr, lags, 3);
    std::int64_t lag = static_cast<std::int64_t>(peak.index);
    if (lag > static_cast<std::int64_t>(m) / 2) lag -= static_cast<std::int64_t>(m);
    return {pre_shift + lag * bin_width_ps, peak.significance};
}

struct FineResult {
    double offset_ps = 0.0;
    double significance = 0.0;
};

/// Delta histogram between the slices, peak + centroid over +/- 3 bins.
/// pre_shift is subtracted from b before differencing.
FineResult fine_correlate(const std::vector<DetectionEvent>& a,
                          const std::vector<DetectionEvent>& b, std::int64_t a_lo,
                          std::int64_t a_hi, std::int64_t pre_shift, std::int64_t fine_bin_ps,
                          std::int64_t window_ps) {
    const std::size_t half_bins = static_cast<std::size_t>(window_ps / fine_bin_ps);
    const std::size_t nbins = 2 * half_bins + 1;
    std::vector<double> hist(nbins, 0.0);

    auto a_it = std::lower_bound(a.begin(), a.end(), a_lo,
                                 [](const DetectionEvent& e, std::int64_t v) {
                                     return e.timestamp_ps < v;
                                 });
    std::size_t b_lo_idx = 0;
    bool any = false;
    for (; a_it != a.end() && a_it->timestamp_ps < a_hi; ++a_it) {
        const std::int64_t ta = a_it->timestamp_ps;
        const std::int64_t lo = ta + pre_shift - window_ps;
        const std::int64_t hi = ta + pre_shift + window_ps;
        while (b_lo_idx < b.size() && b[b_lo_idx].timestamp_ps < lo) ++b_lo_idx;
        for (std::size_t j = b_lo_idx; j < b.size() && b[j].timestamp_ps <= hi; ++j) {
            const std::int64_t delta = b[j].timestamp_ps - pre_shift - ta;
            const std::size_t bin =
                static_cast<std::size_t>((delta + window_ps) / fine_bin_ps);
            if (bin < nbins) {
                hist[bin] += 1.0;
                any = true;
            }
        }
    }
    if (!any) throw NoPeakError("fine_offset: no event pairs inside the search window");

    std::vector<std::size_t> lags(nbins);
    for (std::size_t i = 0; i < nbins; ++i) lags[i] = i;
    const Peak peak = peak_significance(hist, lags, 3);
    if (peak.significance <= kPeakSignificanceThreshold)
        throw NoPeakError("fine_offset: correlation peak below significance threshold");

    // background-subtracted centroid over +/- 3 bins
    double wsum = 0.0, tsum = 0.0;
    for (std::int64_t k = -3; k <= 3; ++k) {
        const std::int64_t idx = static_cast<std::int64_t>(peak.index) + k;
        if (idx < 0 || idx >= static_cast<std::int64_t>(nbins)) continue;
        const double w = std::max(0.0, hist[static_cast<std::size_t>(idx)] - peak.background_mean);
        const double center = -static_cast<double>(window_ps) +
                              (static_cast<double>(idx) + 0.5) * static_cast<double>(fine_bin_ps);
        wsum += w;
        tsum += w * center;
    }
    const double centroid = wsum > 0.0
                                ? tsum / wsum
                                : -static_cast<double>(window_ps) +
                                      (static_cast<double>(peak.index) + 0.5) *
                                          static_cast<double>(fine_bin_ps);
    return {static_cast<double>(pre_shift) + centroid, peak.significance};
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) return {sy / n, 0.0};
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

}  // namespace

std::int64_t coarse_offset(const TimeTagStream& a, const TimeTagStream& b,
                           std::int64_t bin_width_ps, std::int64_t search_span_ps) {
    if (a.empty() || b.empty()) throw EmptyStreamError("coarse_offset: empty stream");
    if (bin_width_ps < 1) throw std::invalid_argument("coarse_offset: bin width must be >= 1 ps");
    if (search_span_ps < bin_width_ps)
        throw std::invalid_argument("coarse_offset: search span must cover at least one bin");

    const std::int64_t a_lo = std::min(a.events.front().timestamp_ps, b.events.front().timestamp_ps);
    const std::int64_t a_hi_full = a.events.back().timestamp_ps;
    const std::int64_t a_hi = std::min(a_hi_full, a_lo + kCoarseSliceSpanPs) + 1;

    const CoarseResult res =
        coarse_correlate(a.events, b.events, a_lo, a_hi, 0, bin_width_ps, search_span_ps);
    if (res.significance <= kPeakSignificanceThreshold)
        throw NoPeakError("coarse_offset: correlation peak below significance threshold");
    return res.offset_ps;
}

SyncResult fine_offset(const TimeTagStream& a, const TimeTagStream& b, std::int64_t coarse_ps,
                       std::int64_t fine_bin_ps, std::int64_t window_ps) {
    if (a.empty() || b.empty()) throw EmptyStreamError("fine_offset: empty stream");
    if (fine_bin_ps < 1) throw std::invalid_argument("fine_offset: bin width must be >= 1 ps");
    if (window_ps < fine_bin_ps)
        throw std::invalid_argument("fine_offset: window must cover at least one bin");

    const FineResult res = fine_correlate(a.events, b.events, a.events.front().timestamp_ps,
                                          a.events.back().timestamp_ps + 1, coarse_ps,
                                          fine_bin_ps, window_ps);
    SyncResult out;
    out.offset_ps = res.offset_ps;
    out.drift_ppm = 0.0;
    out.peak_significance = res.significance;
    out.bin_width_fine_ps = fine_bin_ps;
    return out;
}

SyncResult track_drift(const TimeTagStream& a, const TimeTagStream& b, const SyncResult& initial,
                       double segment_s) {
    if (a.empty() || b.empty()) throw EmptyStreamError("track_drift: empty stream");
    if (!(segment_s > 0.0)) throw std::invalid_argument("track_drift: segment must be positive");

    const std::int64_t t0 = a.events.front().timestamp_ps;
    const std::int64_t segment_ps = static_cast<std::int64_t>(segment_s * 1e12);
    const std::int64_t span = a.events.back().timestamp_ps - t0;
    const std::size_t n_segments = static_cast<std::size_t>(span / segment_ps);
    if (n_segments < 2)
        throw InsufficientSegmentsError("track_drift: stream too short for two segments");

    double model_offset = initial.offset_ps;   // offset at t = 0 (epoch)
    double model_slope = initial.drift_ppm * 1e-6;
    const std::int64_t fine_bin = initial.bin_width_fine_ps > 0 ? initial.bin_width_fine_ps
                                                                : kFineBinPs;

    // Bootstrap pass at coarse bins over a wide window per segment, then two
    // fine passes; each pass refits the line and shrinks the residuals.
    constexpr std::int64_t kSegmentSearchPs = 10'000'000'000;  // +/- 10 ms
    double min_significance = std::numeric_limits<double>::infinity();

    for (int pass = 0; pass < 3; ++pass) {
        std::vector<double> mids, offsets;
        mids.reserve(n_segments);
        offsets.reserve(n_segments);
        for (std::size_t k = 0; k < n_segments; ++k) {
            const std::int64_t seg_lo = t0 + static_cast<std::int64_t>(k) * segment_ps;
            const std::int64_t seg_hi = seg_lo + segment_ps;
            const double t_mid = static_cast<double>(seg_lo) + static_cast<double>(segment_ps) / 2.0;
            const std::int64_t predicted =
                static_cast<std::int64_t>(std::llround(model_offset + model_slope * t_mid));
            if (pass == 0) {
                const std::int64_t slice_hi = std::min(seg_hi, seg_lo + kCoarseSliceSpanPs);
                const CoarseResult res =
                    coarse_correlate(a.events, b.events, seg_lo, slice_hi, predicted,
                                     kCoarseBinPs, kSegmentSearchPs);
                if (res.significance <= kPeakSignificanceThreshold) continue;
                mids.push_back(t_mid);
                offsets.push_back(static_cast<double>(res.offset_ps));
            } else {
                try {
                    const FineResult res = fine_correlate(a.events, b.events, seg_lo, seg_hi,
                                                          predicted, fine_bin, kFineWindowPs);
                    if (res.significance <= kPeakSignificanceThreshold) continue;
                    mids.push_back(t_mid);
                    offsets.push_back(res.offset_ps);
                    if (pass == 2) min_significance = std::min(min_significance, res.significance);
                } catch (const NoPeakError&) {
                    continue;
                }
            }
        }
        if (mids.size() < 2)
            throw InsufficientSegmentsError("track_drift: fewer than two segments yielded peaks");
        const LineFit fit = least_squares(mids, offsets);
        model_offset = fit.intercept;
        model_slope = fit.slope;
    }

    SyncResult out;
    out.offset_ps = model_offset;
    out.drift_ppm = model_slope * 1e6;
    out.peak_significance = std::isfinite(min_significance) ? min_significance : 0.0;
    out.bin_width_fine_ps = fine_bin;
    return out;
}

SyncResult synchronize(const TimeTagStream& a, const TimeTagStream& b) {
    const std::int64_t coarse = coarse_offset(a, b, kCoarseBinPs, kCoarseSpanPs);
    const double span = std::min(a.span_s(), b.span_s());
    if (span >= 2.0 * kDriftSegmentS) {
        // An unknown drift smears a full-stream fine correlation, so seed the
        // drift tracker straight from the coarse lag; its bootstrap pass has a
        // wide enough per-segment search to absorb the coarse quantization.
        SyncResult seed;
        seed.offset_ps = static_cast<double>(coarse);
        seed.drift_ppm = 0.0;
        seed.bin_width_fine_ps = kFineBinPs;
        return track_drift(a, b, seed, kDriftSegmentS);
    }
    return fine_offset(a, b, coarse, kFineBinPs, kFineWindowPs);
}

TimeTagStream apply_sync(const TimeTagStream& b, const SyncResult& sync) {
    TimeTagStream out;
    out.party = b.party;
    out.epoch_label = b.epoch_label;
    out.events.reserve(b.events.size());
    for (const auto& e : b.events) {
        const std::int64_t t = align_timestamp(e.timestamp_ps, sync);
        if (t >= 0) out.events.push_back({t, e.channel});
    }
    out.normalize();
    return out;
}

}  // namespace qkdpost
