#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdpost/core.hpp"
#include "qkdpost/keyrate.hpp"
#include "qkdpost/orbitpass.hpp"

namespace qkdpost {

/// Malformed tag file: bad magic/version, framing violation, unknown channel,
/// or non-monotone timestamps.
struct TagFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TagFileFormat { Binary, Csv };

// Binary layout: 16-byte header (magic "QTAG", u16 version, 10 reserved
// bytes), then 16-byte little-endian records of u64 timestamp_ps, u8 channel
// (0=H 1=V 2=D 3=A) and 7 pad bytes. The fixed record size trades file size
// for aligned streaming reads of multi-GB tag files.
inline constexpr char kTagMagic[4] = {'Q', 'T', 'A', 'G'};
inline constexpr std::uint16_t kTagVersion = 1;

void write_tag_file(const std::filesystem::path& path, const TimeTagStream& stream,
                    TagFileFormat format);

/// Reads either format (sniffed from the magic bytes). Validates
/// monotonicity and channel codes; throws TagFormatError.
TimeTagStream read_tag_file(const std::filesystem::path& path, Party party);

/// Per-block CSV: "timestamp_s,N,n_pe,mismatches,qber_hat".
void write_block_csv(const std::filesystem::path& path, const std::vector<SiftedBlock>& blocks);

/// One key-rate evaluation bound to the block it came from.
struct KeyRateRecord {
    SiftedBlock block;
    KeyRateResult asymptotic;
    KeyRateResult sharp;
};

/// Key-rate report rows: "N,qber,q_threshold,asymptotic_bps,sharp_bps,sharp_bits".
void write_keyrate_csv(const std::filesystem::path& path,
                       const std::vector<KeyRateRecord>& records);
void write_keyrate_json(const std::filesystem::path& path,
                        const std::vector<KeyRateRecord>& records);

/// Finite-key curve rows: "N,rate_bps".
void write_curve_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::uint64_t, double>>& curve);

/// One row of the pass table (shaped like the published per-pass summary).
struct PassRow {
    std::string label;
    double max_elevation_deg = 0.0;
    bool visible = false;
    double duration_s = 0.0;
    std::uint64_t integrated_sifted = 0;
    double skr_bps = 0.0;
};

/// Pass report: "label,max_elevation_deg,duration_s,integrated_sifted,skr_bps"
/// (a NoVisibility row keeps the label and elevation, blanks the rest).
void write_pass_csv(const std::filesystem::path& path, const std::vector<PassRow>& rows);
void write_pass_json(const std::filesystem::path& path, const std::vector<PassRow>& rows);

}  // namespace qkdpost
