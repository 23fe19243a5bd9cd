#include "qkdpost/tagio.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qkdpost {

namespace {

constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kRecordSize = 16;

void put_u64_le(char* out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64_le(const char* in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
    return v;
}

Channel parse_channel_token(const std::string& token, const std::filesystem::path& path) {
    if (token == "H" || token == "0") return Channel::H;
    if (token == "V" || token == "1") return Channel::V;
    if (token == "D" || token == "2") return Channel::D;
    if (token == "A" || token == "3") return Channel::A;
    throw TagFormatError(path.string() + ": unknown channel '" + token + "'");
}

void check_monotone(const TimeTagStream& stream, const std::filesystem::path& path) {
    std::int64_t prev = -1;
    for (const auto& e : stream.events) {
        if (e.timestamp_ps < prev)
            throw TagFormatError(path.string() + ": timestamps not monotone");
        prev = e.timestamp_ps;
    }
}

void write_binary(const std::filesystem::path& path, const TimeTagStream& stream) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());

    char header[kHeaderSize] = {};
    std::memcpy(header, kTagMagic, 4);
    header[4] = static_cast<char>(kTagVersion & 0xff);
    header[5] = static_cast<char>((kTagVersion >> 8) & 0xff);
    out.write(header, kHeaderSize);

    char rec[kRecordSize] = {};
    for (const auto& e : stream.events) {
        put_u64_le(rec, static_cast<std::uint64_t>(e.timestamp_ps));
        rec[8] = static_cast<char>(e.channel);
        out.write(rec, kRecordSize);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_csv(const std::filesystem::path& path, const TimeTagStream& stream) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "timestamp_ps,channel\n";
    for (const auto& e : stream.events)
        out << e.timestamp_ps << ',' << to_string(e.channel) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

TimeTagStream read_binary(std::ifstream& in, const std::filesystem::path& path, Party party) {
    char header[kHeaderSize];
    in.read(header, kHeaderSize);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize) ||
        std::memcmp(header, kTagMagic, 4) != 0)
        throw TagFormatError(path.string() + ": bad magic");
    const std::uint16_t version = static_cast<std::uint16_t>(
        static_cast<unsigned char>(header[4]) |
        (static_cast<unsigned char>(header[5]) << 8));
    if (version != kTagVersion)
        throw TagFormatError(path.string() + ": unsupported version " + std::to_string(version));

    TimeTagStream stream;
    stream.party = party;
    stream.epoch_label = path.filename().string();

    char rec[kRecordSize];
    for (;;) {
        in.read(rec, kRecordSize);
        const std::streamsize got = in.gcount();
        if (got == 0) break;
        if (got != static_cast<std::streamsize>(kRecordSize))
            throw TagFormatError(path.string() + ": truncated record");
        const std::uint64_t ts = get_u64_le(rec);
        const auto ch = static_cast<unsigned char>(rec[8]);
        if (ch > 3)
            throw TagFormatError(path.string() + ": unknown channel byte " + std::to_string(ch));
        stream.events.push_back({static_cast<std::int64_t>(ts), static_cast<Channel>(ch)});
    }
    check_monotone(stream, path);
    return stream;
}

TimeTagStream read_csv(std::ifstream& in, const std::filesystem::path& path, Party party) {
    TimeTagStream stream;
    stream.party = party;
    stream.epoch_label = path.filename().string();

    std::string line;
    if (!std::getline(in, line) || line.rfind("timestamp_ps", 0) != 0)
        throw TagFormatError(path.string() + ": missing CSV header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw TagFormatError(path.string() + ": malformed line " + std::to_string(lineno));
        std::int64_t ts = 0;
        try {
            ts = std::stoll(line.substr(0, comma));
        } catch (const std::exception&) {
            throw TagFormatError(path.string() + ": bad timestamp at line " +
                                 std::to_string(lineno));
        }
        if (ts < 0)
            throw TagFormatError(path.string() + ": negative timestamp at line " +
                                 std::to_string(lineno));
        std::string ch = line.substr(comma + 1);
        if (!ch.empty() && ch.back() == '\r') ch.pop_back();
        stream.events.push_back({ts, parse_channel_token(ch, path)});
    }
    check_monotone(stream, path);
    return stream;
}

}  // namespace

void write_tag_file(const std::filesystem::path& path, const TimeTagStream& stream,
                    TagFileFormat format) {
    if (format == TagFileFormat::Binary)
        write_binary(path, stream);
    else
        write_csv(path, stream);
}

TimeTagStream read_tag_file(const std::filesystem::path& path, Party party) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    in.seekg(0);
    if (in.gcount() == 4 && std::memcmp(magic, kTagMagic, 4) == 0)
        return read_binary(in, path, party);
    return read_csv(in, path, party);
}

void write_block_csv(const std::filesystem::path& path, const std::vector<SiftedBlock>& blocks) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "timestamp_s,N,n_pe,mismatches,qber_hat\n";
    out.precision(10);
    for (const auto& b : blocks)
        out << b.t_start_s << ',' << b.n_total << ',' << b.n_pe << ',' << b.n_mismatch << ','
            << b.qber_hat << '\n';
}

void write_keyrate_csv(const std::filesystem::path& path,
                       const std::vector<KeyRateRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "t_start_s,N,qber,q_threshold,asymptotic_bps,sharp_bps,sharp_bits\n";
    out.precision(10);
    for (const auto& r : records)
        out << r.block.t_start_s << ',' << r.block.n_total << ',' << r.block.qber_hat << ','
            << (r.sharp.q_threshold ? *r.sharp.q_threshold : 0.0) << ',' << r.asymptotic.rate_bps
            << ',' << r.sharp.rate_bps << ',' << r.sharp.secret_bits << '\n';
}

void write_keyrate_json(const std::filesystem::path& path,
                        const std::vector<KeyRateRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json row;
        row["t_start_s"] = r.block.t_start_s;
        row["duration_s"] = r.block.duration_s;
        row["N"] = r.block.n_total;
        row["n_pe"] = r.block.n_pe;
        row["mismatches"] = r.block.n_mismatch;
        row["qber"] = r.block.qber_hat;
        if (r.sharp.q_threshold) row["q_threshold"] = *r.sharp.q_threshold;
        if (r.sharp.kappa) row["kappa"] = *r.sharp.kappa;
        row["asymptotic_bps"] = r.asymptotic.rate_bps;
        row["sharp_bps"] = r.sharp.rate_bps;
        row["sharp_bits"] = r.sharp.secret_bits;
        arr.push_back(row);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << arr.dump(2) << '\n';
}

void write_curve_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::uint64_t, double>>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "N,rate_bps\n";
    out.precision(10);
    for (const auto& [n, rate] : curve) out << n << ',' << rate << '\n';
}

void write_pass_csv(const std::filesystem::path& path, const std::vector<PassRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "label,max_elevation_deg,duration_s,integrated_sifted,skr_bps\n";
    out.precision(10);
    for (const auto& r : rows) {
        out << r.label << ',' << r.max_elevation_deg << ',';
        if (r.visible)
            out << r.duration_s << ',' << r.integrated_sifted << ',' << r.skr_bps << '\n';
        else
            out << ",,no_visibility\n";
    }
}

void write_pass_json(const std::filesystem::path& path, const std::vector<PassRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row;
        row["label"] = r.label;
        row["max_elevation_deg"] = r.max_elevation_deg;
        row["visible"] = r.visible;
        if (r.visible) {
            row["duration_s"] = r.duration_s;
            row["integrated_sifted"] = r.integrated_sifted;
            row["skr_bps"] = r.skr_bps;
        }
        arr.push_back(row);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << arr.dump(2) << '\n';
}

}  // namespace qkdpost
