// qkdpost command line: simulate | pipeline | pass
//
// Every run writes a JSON manifest with the effective parameters and seed so
// that any output can be replayed exactly.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qkdpost/core.hpp"
#include "qkdpost/keyrate.hpp"
#include "qkdpost/linkbudget.hpp"
#include "qkdpost/orbitpass.hpp"
#include "qkdpost/sift.hpp"
#include "qkdpost/sim.hpp"
#include "qkdpost/sync.hpp"
#include "qkdpost/tagio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoPeak = 2;
constexpr int kExitBadFile = 3;

void write_manifest(const fs::path& path, const std::string& command, const json& params) {
    json m;
    m["command"] = command;
    m["parameters"] = params;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
    out << m.dump(2) << '\n';
}

qkdpost::TagFileFormat tag_format(const std::string& name) {
    return name == "csv" ? qkdpost::TagFileFormat::Csv : qkdpost::TagFileFormat::Binary;
}

struct SimulateArgs {
    qkdpost::SimConfig cfg;
    std::string out_alice = "alice.qtag";
    std::string out_bob = "bob.qtag";
    std::string format = "bin";
};

int run_simulate(const SimulateArgs& args) {
    const auto [alice, bob] = qkdpost::generate_pair_streams(args.cfg);
    qkdpost::write_tag_file(args.out_alice, alice, tag_format(args.format));
    qkdpost::write_tag_file(args.out_bob, bob, tag_format(args.format));

    json params;
    params["pair_rate_cps"] = args.cfg.pair_rate_cps;
    params["arm_transmittance_a"] = args.cfg.arm_transmittance_a;
    params["arm_transmittance_b"] = args.cfg.arm_transmittance_b;
    params["intrinsic_qber"] = args.cfg.intrinsic_qber;
    params["background_rate_per_channel_cps"] = args.cfg.background_rate_per_channel_cps;
    params["timing_jitter_sigma_ps"] = args.cfg.timing_jitter_sigma_ps;
    params["clock_offset_ps"] = args.cfg.clock_offset_ps;
    params["clock_drift_ppm"] = args.cfg.clock_drift_ppm;
    params["duration_s"] = args.cfg.duration_s;
    params["seed"] = args.cfg.seed;
    params["out_alice"] = args.out_alice;
    params["out_bob"] = args.out_bob;
    params["format"] = args.format;
    write_manifest(fs::path(args.out_alice).string() + ".manifest.json", "simulate", params);

    auto report = [](const char* name, const qkdpost::TimeTagStream& s) {
        std::array<std::size_t, 4> per_channel{};
        for (const auto& e : s.events) ++per_channel[static_cast<std::size_t>(e.channel)];
        std::cout << name << ": " << s.size() << " events (H " << per_channel[0] << ", V "
                  << per_channel[1] << ", D " << per_channel[2] << ", A " << per_channel[3]
                  << "), span " << s.span_s() << " s\n";
    };
    report("alice", alice);
    report("bob", bob);
    return kExitOk;
}

struct PipelineArgs {
    std::string alice_path;
    std::string bob_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::int64_t window_ps = qkdpost::kDefaultCoincidenceWindowPs;
    double block_s = 1.0;
    double aggregate_s = 300.0;
    std::uint64_t seed = 1;
    double epsilon_total = 4e-16;
    double f_ec = 1.2;
    double sample_fraction = 0.20;
    std::int64_t coarse_bin_ps = qkdpost::kCoarseBinPs;
    std::int64_t coarse_span_ps = qkdpost::kCoarseSpanPs;
    std::int64_t fine_bin_ps = qkdpost::kFineBinPs;
    std::int64_t fine_window_ps = qkdpost::kFineWindowPs;
    double drift_segment_s = qkdpost::kDriftSegmentS;
};

int run_pipeline(const PipelineArgs& args) {
    const qkdpost::TimeTagStream alice =
        qkdpost::read_tag_file(args.alice_path, qkdpost::Party::Alice);
    const qkdpost::TimeTagStream bob = qkdpost::read_tag_file(args.bob_path, qkdpost::Party::Bob);

    qkdpost::SyncResult sync;
    const std::int64_t coarse =
        qkdpost::coarse_offset(alice, bob, args.coarse_bin_ps, args.coarse_span_ps);
    const double span = std::min(alice.span_s(), bob.span_s());
    if (span >= 2.0 * args.drift_segment_s) {
        qkdpost::SyncResult seed;
        seed.offset_ps = static_cast<double>(coarse);
        seed.bin_width_fine_ps = args.fine_bin_ps;
        sync = qkdpost::track_drift(alice, bob, seed, args.drift_segment_s);
    } else {
        sync = qkdpost::fine_offset(alice, bob, coarse, args.fine_bin_ps, args.fine_window_ps);
    }

    qkdpost::SecurityParams params = qkdpost::split_epsilon(args.epsilon_total);
    params.f_ec = args.f_ec;
    params.sample_fraction = args.sample_fraction;
    params.validate();

    const auto pairs = qkdpost::find_coincidences(alice, bob, sync, args.window_ps);
    const auto blocks = qkdpost::process_blocks(pairs, args.block_s, params, args.seed);
    const auto aggregates = qkdpost::aggregate_blocks(blocks, args.aggregate_s);

    std::vector<qkdpost::KeyRateRecord> block_records, aggregate_records;
    for (const auto& b : blocks)
        block_records.push_back(
            {b, qkdpost::asymptotic_key_length(b, params),
             b.n_pe >= 1 ? qkdpost::sharp_key_length(b, params) : qkdpost::KeyRateResult{}});
    for (const auto& b : aggregates)
        aggregate_records.push_back(
            {b, qkdpost::asymptotic_key_length(b, params),
             b.n_pe >= 1 ? qkdpost::sharp_key_length(b, params) : qkdpost::KeyRateResult{}});

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    qkdpost::write_block_csv(dir / "blocks.csv", blocks);
    if (args.format == "json") {
        qkdpost::write_keyrate_json(dir / "keyrate_blocks.json", block_records);
        qkdpost::write_keyrate_json(dir / "keyrate_aggregates.json", aggregate_records);
    } else {
        qkdpost::write_keyrate_csv(dir / "keyrate_blocks.csv", block_records);
        qkdpost::write_keyrate_csv(dir / "keyrate_aggregates.csv", aggregate_records);
    }

    json params_json;
    params_json["alice"] = args.alice_path;
    params_json["bob"] = args.bob_path;
    params_json["out_dir"] = args.out_dir;
    params_json["format"] = args.format;
    params_json["window_ps"] = args.window_ps;
    params_json["block_s"] = args.block_s;
    params_json["aggregate_s"] = args.aggregate_s;
    params_json["seed"] = args.seed;
    params_json["epsilon_total"] = args.epsilon_total;
    params_json["f_ec"] = args.f_ec;
    params_json["sample_fraction"] = args.sample_fraction;
    params_json["coarse_bin_ps"] = args.coarse_bin_ps;
    params_json["coarse_span_ps"] = args.coarse_span_ps;
    params_json["fine_bin_ps"] = args.fine_bin_ps;
    params_json["fine_window_ps"] = args.fine_window_ps;
    params_json["drift_segment_s"] = args.drift_segment_s;
    params_json["sync_offset_ps"] = sync.offset_ps;
    params_json["sync_drift_ppm"] = sync.drift_ppm;
    write_manifest(dir / "pipeline.manifest.json", "pipeline", params_json);

    double sifted = 0.0, pooled_mm = 0.0, pooled_pe = 0.0, duration = 0.0;
    for (const auto& b : blocks) {
        sifted += static_cast<double>(b.n_total);
        pooled_mm += static_cast<double>(b.n_mismatch);
        pooled_pe += static_cast<double>(b.n_pe);
        duration += b.duration_s;
    }
    std::cout << "sync: offset " << sync.offset_ps * 1e-6 << " us, drift " << sync.drift_ppm
              << " ppm, significance " << sync.peak_significance << "\n";
    std::cout << "sifted: " << static_cast<std::uint64_t>(sifted) << " pairs over " << duration
              << " s (" << (duration > 0 ? sifted / duration : 0.0) << " cps), pooled QBER "
              << (pooled_pe > 0 ? 100.0 * pooled_mm / pooled_pe : 0.0) << " %\n";
    for (const auto& r : aggregate_records)
        std::cout << "aggregate t=" << r.block.t_start_s << " s: N " << r.block.n_total
                  << ", asymptotic " << r.asymptotic.rate_bps << " bps, sharp "
                  << r.sharp.rate_bps << " bps\n";
    return kExitOk;
}

struct PassArgs {
    double baseline_cps = 24665.0;
    double qber = 0.0478;
    double altitude_km = 500.0;
    std::vector<double> max_elevations_deg = {32.0, 47.0, 52.0, 76.0, 80.0};
    double min_elevation_deg = 20.0;
    double time_step_s = 1.0;
    double wavelength_nm = 780.0;
    double waist_radius_m = 0.04;
    double m_squared = 1.6;
    double receiver_radius_m = 0.4;
    double extra_loss_db = 6.0;
    double epsilon_total = 4e-16;
    double f_ec = 1.2;
    double sample_fraction = 0.20;
    std::string out_prefix = "pass_report";
    std::string format = "csv";
    std::string elevation_csv;
};

int run_pass(const PassArgs& args) {
    qkdpost::ExtrapolationConfig ex;
    ex.baseline_rate_cps = args.baseline_cps;
    ex.beam.wavelength_m = args.wavelength_nm * 1e-9;
    ex.beam.waist_radius_m = args.waist_radius_m;
    ex.beam.m_squared = args.m_squared;
    ex.receiver_radius_m = args.receiver_radius_m;
    ex.extra_loss_db = args.extra_loss_db;
    ex.qber = args.qber;
    ex.security = qkdpost::split_epsilon(args.epsilon_total);
    ex.security.f_ec = args.f_ec;
    ex.security.sample_fraction = args.sample_fraction;

    std::vector<qkdpost::PassRow> rows;

    auto add_row = [&](const std::string& label, double max_elev,
                       const qkdpost::PassProfile& profile) {
        const qkdpost::PassExtrapolation result = qkdpost::extrapolate_pass(profile, ex);
        qkdpost::PassRow row;
        row.label = label;
        row.max_elevation_deg = max_elev;
        row.visible = true;
        row.duration_s = result.profile.duration_s;
        row.integrated_sifted = result.integrated_sifted;
        row.skr_bps = result.keyrate.rate_bps;
        rows.push_back(row);
    };

    if (!args.elevation_csv.empty()) {
        std::ifstream in(args.elevation_csv);
        if (!in) throw std::runtime_error("cannot open: " + args.elevation_csv);
        std::vector<std::pair<double, double>> table;
        std::string line;
        std::getline(in, line);  // header: t_s,elevation_deg
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("malformed elevation table line: " + line);
            table.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        }
        const auto profile = qkdpost::profile_from_table(table, args.altitude_km,
                                                         args.min_elevation_deg, args.time_step_s);
        add_row("table", profile.max_elevation_deg, profile);
    }

    int index = 1;
    for (double elev : args.max_elevations_deg) {
        const std::string label = "pass" + std::to_string(index++);
        qkdpost::PassConfig cfg;
        cfg.altitude_km = args.altitude_km;
        cfg.max_elevation_deg = elev;
        cfg.min_elevation_deg = args.min_elevation_deg;
        cfg.time_step_s = args.time_step_s;
        try {
            add_row(label, elev, qkdpost::elevation_profile(cfg));
        } catch (const qkdpost::NoVisibilityError&) {
            qkdpost::PassRow row;
            row.label = label;
            row.max_elevation_deg = elev;
            row.visible = false;
            rows.push_back(row);
        }
    }

    const fs::path csv_path = args.out_prefix + ".csv";
    const fs::path json_path = args.out_prefix + ".json";
    if (args.format == "json")
        qkdpost::write_pass_json(json_path, rows);
    else
        qkdpost::write_pass_csv(csv_path, rows);

    json params_json;
    params_json["baseline_cps"] = args.baseline_cps;
    params_json["qber"] = args.qber;
    params_json["altitude_km"] = args.altitude_km;
    params_json["max_elevations_deg"] = args.max_elevations_deg;
    params_json["min_elevation_deg"] = args.min_elevation_deg;
    params_json["time_step_s"] = args.time_step_s;
    params_json["wavelength_nm"] = args.wavelength_nm;
    params_json["waist_radius_m"] = args.waist_radius_m;
    params_json["m_squared"] = args.m_squared;
    params_json["receiver_radius_m"] = args.receiver_radius_m;
    params_json["extra_loss_db"] = args.extra_loss_db;
    params_json["epsilon_total"] = args.epsilon_total;
    params_json["f_ec"] = args.f_ec;
    params_json["sample_fraction"] = args.sample_fraction;
    params_json["elevation_csv"] = args.elevation_csv;
    params_json["out_prefix"] = args.out_prefix;
    params_json["format"] = args.format;
    write_manifest(args.out_prefix + ".manifest.json", "pass", params_json);

    for (const auto& r : rows) {
        std::cout << r.label << ": max elev " << r.max_elevation_deg << " deg";
        if (r.visible)
            std::cout << ", duration " << r.duration_s << " s, N " << r.integrated_sifted
                      << ", SKR " << r.skr_bps << " bps\n";
        else
            std::cout << ": no visibility above the gate\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entangled-photon QKD post-processing and LEO pass extrapolation"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("QKDPOST_CONFIG");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate correlated time-tag streams");
    simulate->add_option("--pair-rate", sim.cfg.pair_rate_cps, "Source pair rate (pairs/s)");
    simulate->add_option("--ta", sim.cfg.arm_transmittance_a, "Alice arm transmittance");
    simulate->add_option("--tb", sim.cfg.arm_transmittance_b, "Bob arm transmittance");
    simulate->add_option("--qber", sim.cfg.intrinsic_qber, "Intrinsic QBER");
    simulate->add_option("--background", sim.cfg.background_rate_per_channel_cps,
                         "Background per channel (cps)");
    simulate->add_option("--jitter-ps", sim.cfg.timing_jitter_sigma_ps, "Timing jitter sigma (ps)");
    simulate->add_option("--offset-ps", sim.cfg.clock_offset_ps, "Bob clock offset (ps)");
    simulate->add_option("--drift-ppm", sim.cfg.clock_drift_ppm, "Bob clock drift (ppm)");
    simulate->add_option("--duration", sim.cfg.duration_s, "Acquisition length (s)");
    simulate->add_option("--seed", sim.cfg.seed, "Random seed");
    simulate->add_option("--out-alice", sim.out_alice, "Alice output path");
    simulate->add_option("--out-bob", sim.out_bob, "Bob output path");
    simulate->add_option("--format", sim.format, "Tag file format")
        ->check(CLI::IsMember({"bin", "csv"}));

    PipelineArgs pipe;
    CLI::App* pipeline = app.add_subcommand("pipeline", "Sync, sift and compute key rates");
    pipeline->add_option("--alice", pipe.alice_path, "Alice tag file")->required();
    pipeline->add_option("--bob", pipe.bob_path, "Bob tag file")->required();
    pipeline->add_option("--out-dir", pipe.out_dir, "Report directory");
    pipeline->add_option("--format", pipe.format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}));
    pipeline->add_option("--window-ps", pipe.window_ps, "Coincidence window +/- (ps)");
    pipeline->add_option("--block-s", pipe.block_s, "Block width (s)");
    pipeline->add_option("--aggregate-s", pipe.aggregate_s, "Aggregation window (s)");
    pipeline->add_option("--seed", pipe.seed, "Sampling seed");
    pipeline->add_option("--epsilon-total", pipe.epsilon_total, "Total security parameter");
    pipeline->add_option("--f-ec", pipe.f_ec, "Error-correction efficiency");
    pipeline->add_option("--sample-fraction", pipe.sample_fraction, "QBER sampling fraction");
    pipeline->add_option("--coarse-bin-ps", pipe.coarse_bin_ps, "Coarse correlation bin (ps)");
    pipeline->add_option("--coarse-span-ps", pipe.coarse_span_ps, "Coarse search span +/- (ps)");
    pipeline->add_option("--fine-bin-ps", pipe.fine_bin_ps, "Fine correlation bin (ps)");
    pipeline->add_option("--fine-window-ps", pipe.fine_window_ps, "Fine search window +/- (ps)");
    pipeline->add_option("--drift-segment-s", pipe.drift_segment_s, "Drift segment length (s)");

    PassArgs pass;
    CLI::App* pass_cmd = app.add_subcommand("pass", "Extrapolate to LEO passes");
    pass_cmd->add_option("--baseline", pass.baseline_cps, "Reference sifted rate (cps)");
    pass_cmd->add_option("--qber", pass.qber, "QBER held over the pass");
    pass_cmd->add_option("--altitude-km", pass.altitude_km, "Orbit altitude (km)");
    pass_cmd->add_option("--max-elev", pass.max_elevations_deg, "Pass max elevations (deg)");
    pass_cmd->add_option("--min-elev", pass.min_elevation_deg, "Elevation gate (deg)");
    pass_cmd->add_option("--time-step", pass.time_step_s, "Profile time step (s)");
    pass_cmd->add_option("--wavelength-nm", pass.wavelength_nm, "Downlink wavelength (nm)");
    pass_cmd->add_option("--waist-m", pass.waist_radius_m, "Transmitter waist radius (m)");
    pass_cmd->add_option("--m2", pass.m_squared, "Beam quality factor");
    pass_cmd->add_option("--receiver-radius-m", pass.receiver_radius_m, "Receiver radius (m)");
    pass_cmd->add_option("--extra-loss-db", pass.extra_loss_db, "Flat margin (dB)");
    pass_cmd->add_option("--epsilon-total", pass.epsilon_total, "Total security parameter");
    pass_cmd->add_option("--f-ec", pass.f_ec, "Error-correction efficiency");
    pass_cmd->add_option("--sample-fraction", pass.sample_fraction, "QBER sampling fraction");
    pass_cmd->add_option("--out", pass.out_prefix, "Report path prefix");
    pass_cmd->add_option("--format", pass.format, "Report format")
        ->check(CLI::IsMember({"csv", "json"}));
    pass_cmd->add_option("--elevation-csv", pass.elevation_csv,
                         "External (t_s,elevation_deg) table for one pass");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (pipeline->parsed()) return run_pipeline(pipe);
        if (pass_cmd->parsed()) return run_pass(pass);
    } catch (const qkdpost::NoPeakError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoPeak;
    } catch (const qkdpost::TagFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadFile;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
