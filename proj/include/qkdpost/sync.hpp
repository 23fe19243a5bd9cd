#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qkdpost/core.hpp"

namespace qkdpost {

struct SyncError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cross-correlation peak below the detection threshold, or nothing to correlate.
struct NoPeakError : SyncError {
    using SyncError::SyncError;
};

struct EmptyStreamError : SyncError {
    using SyncError::SyncError;
};

/// Fewer than two drift segments produced a usable peak.
struct InsufficientSegmentsError : SyncError {
    using SyncError::SyncError;
};

/// Recovered clock relation: Bob reads t_a * (1 + drift_ppm*1e-6) + offset_ps
/// when Alice reads t_a. offset_ps is the offset at the stream epoch (t = 0).
struct SyncResult {
    double offset_ps = 0.0;
    double drift_ppm = 0.0;
    double peak_significance = 0.0;  // peak height over off-peak mean, in sigma
    std::int64_t bin_width_fine_ps = 0;
};

/// Peaks below this many sigma over the off-peak mean are rejected. With
/// ~1e6 correlation bins the false-lock probability at 6 sigma is negligible.
inline constexpr double kPeakSignificanceThreshold = 6.0;

/// Lag of the circular cross-correlation peak of the two binned streams,
/// searched over +/- search_span_ps, as a multiple of bin_width_ps.
///
/// Events are folded modulo the correlation length, so arbitrarily long
/// streams stay in bounded memory; only a leading slice (a few seconds) is
/// used so that an unknown clock drift cannot smear the peak away.
/// The transform runs in O(M log M) for M bins.
///
/// Throws EmptyStreamError or NoPeakError.
std::int64_t coarse_offset(const TimeTagStream& a, const TimeTagStream& b,
                           std::int64_t bin_width_ps, std::int64_t search_span_ps);

/// Refines a coarse offset by histogramming pairwise time differences within
/// +/- window_ps of it at fine_bin_ps resolution. The peak centroid over
/// +/- 3 bins gives sub-bin precision; the centroid is preferred over a
/// parabolic fit because it stays robust under asymmetric jitter.
SyncResult fine_offset(const TimeTagStream& a, const TimeTagStream& b, std::int64_t coarse_ps,
                       std::int64_t fine_bin_ps, std::int64_t window_ps);

/// Estimates per-segment offsets over consecutive windows of segment_s
/// seconds and least-squares fits the linear clock model. Segment offsets
/// are re-estimated twice at fine resolution after the first fit so that the
/// residual drift within a segment is far below one fine bin.
///
/// Throws InsufficientSegmentsError when fewer than two segments yield peaks.
SyncResult track_drift(const TimeTagStream& a, const TimeTagStream& b, const SyncResult& initial,
                       double segment_s);

/// Convenience pipeline: coarse + fine + drift tracking with the default
/// parameter ladder (1 us bins over +/- 1 s, then 1 ns bins over +/- 10 us,
/// then 10 s drift segments). Falls back to a drift-free result when the
/// streams are too short to segment.
SyncResult synchronize(const TimeTagStream& a, const TimeTagStream& b);

/// Maps an event time from Bob's clock onto Alice's.
inline std::int64_t align_timestamp(std::int64_t t_bob_ps, const SyncResult& sync) {
    const double t = (static_cast<double>(t_bob_ps) - sync.offset_ps) /
                     (1.0 + sync.drift_ppm * 1e-6);
    return static_cast<std::int64_t>(std::llround(t));
}

/// Rewrites a whole stream onto Alice's clock (sorted, deduplicated).
TimeTagStream apply_sync(const TimeTagStream& b, const SyncResult& sync);

// Default parameter ladder. The source experiment reports no
// synchronization parameters; these are engineering defaults sized so the
// coarse histograms of a 20-minute, ~25 kcps stream stay in memory and the
// fine stage resolves below the coincidence window.
inline constexpr std::int64_t kCoarseBinPs = 1'000'000;        // 1 us
inline constexpr std::int64_t kCoarseSpanPs = 1'000'000'000'000;  // +/- 1 s
inline constexpr std::int64_t kFineBinPs = 1'000;              // 1 ns
inline constexpr std::int64_t kFineWindowPs = 10'000'000;      // +/- 10 us
inline constexpr double kDriftSegmentS = 10.0;

}  // namespace qkdpost
