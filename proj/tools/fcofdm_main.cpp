#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fcofdm/complexity.hpp"
#include "fcofdm/config.hpp"
#include "fcofdm/linksim.hpp"
#include "fcofdm/metrics.hpp"
#include "fcofdm/optimizer.hpp"
#include "fcofdm/parallel.hpp"

using namespace fcofdm;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;  // 0 = take the config's seed
    unsigned threads = 0;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "configuration file")->required();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "seed override (0 keeps the config value)");
    cmd->add_option("--threads", opt.threads,
                    "worker threads (default: FCOFDM_THREADS or hardware)");
    cmd->add_option("--format", opt.format, "result table format")
        ->check(CLI::IsMember({"csv", "json"}));
}

struct Run {
    Json config;
    std::filesystem::path out;
    std::uint64_t seed = 1;
    std::string id;
};

Run start_run(const std::string& command, const CommonOptions& opt) {
    Run run;
    run.config = load_config(opt.config_path);
    run.seed = opt.seed ? opt.seed : run.config.value("seed", 1ull);
    run.config["seed"] = run.seed;
    run.id = run_id(run.config, run.seed);
    run.out = opt.out_dir;
    std::filesystem::create_directories(run.out);

    Json manifest;
    manifest["command"] = command;
    manifest["config"] = opt.config_path;
    manifest["output_dir"] = run.out.string();
    manifest["seed"] = run.seed;
    manifest["engine_version"] = kEngineVersion;
    manifest["run_id"] = run.id;
    std::ofstream mf(run.out / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw std::runtime_error("cannot write manifest.json");
    return run;
}

std::ofstream open_csv(const Run& run, const std::string& name) {
    std::ofstream out(run.out / name);
    if (!out) throw std::runtime_error("cannot write " + name);
    out << "# run_id " << run.id << "\n";
    return out;
}

void write_summary(const Run& run, const Json& summary) {
    Json j = summary;
    j["run_id"] = run.id;
    std::ofstream js(run.out / "summary.json");
    js << j.dump(2) << "\n";
    std::ofstream cs(run.out / "summary.csv");
    cs << "# run_id " << run.id << "\nmetric,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_number())
            cs << it.key() << "," << it.value().dump() << "\n";
        else if (it.value().is_boolean() || it.value().is_string())
            cs << it.key() << "," << it.value().dump() << "\n";
    }
}

void write_table(const Run& run, const std::string& stem, const std::string& format,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
    if (format == "json") {
        Json j;
        j["run_id"] = run.id;
        j["columns"] = columns;
        j["rows"] = rows;
        std::ofstream out(run.out / (stem + ".json"));
        out << j.dump(2) << "\n";
        return;
    }
    std::ofstream out = open_csv(run, stem + ".csv");
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
    out.precision(12);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << row[c] << (c + 1 < row.size() ? ',' : '\n');
    }
}

int cmd_design(const CommonOptions& opt) {
    Run run = start_run("design", opt);
    DesignProblem problem = parse_design(run.config);
    problem.seed = run.seed;
    problem.threads = opt.threads;

    const DesignReport report = optimize_weights(problem);
    const FcConfig& cfg =
        problem.model.tx.filtered ? problem.model.tx.fc : problem.model.rx.fc;
    save_mask((run.out / "mask.txt").string(), cfg, report.mask, run.seed, run.id);

    Json summary;
    summary["evm_max_db"] = report.evm_max_db;
    summary["evm_avg_db"] = report.evm_avg_db;
    summary["stopband_max_db"] = report.stopband_max_db;
    summary["stopband_target_db"] = -problem.stopband_atten_db;
    summary["feasible"] = report.feasible;
    summary["evaluations"] = report.evaluations;
    write_summary(run, summary);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < report.mask.transition.size(); ++i)
        rows.push_back({double(i), report.mask.transition[i]});
    write_table(run, "weights", opt.format, {"index", "weight"}, rows);

    if (!report.feasible)
        std::cerr << "design: no feasible mask meets the stopband target (best "
                  << report.stopband_max_db << " dB)\n";
    std::cout << "design: EVM_max " << report.evm_max_db << " dB, EVM_avg "
              << report.evm_avg_db << " dB, stopband " << report.stopband_max_db << " dB\n";
    return 0;
}

int cmd_analyze(const CommonOptions& opt) {
    Run run = start_run("analyze", opt);
    const Json analysis = run.config.value("analysis", Json::object());
    const FilterMode mode = parse_filter_mode(analysis.value("mode", "two_sided"));
    const std::size_t index = analysis.value("subband", 0);
    TmuxModel model = build_model(run.config, index, mode);

    const auto pairs = measured_subcarriers(model);
    const auto induced = evm_profile_db(model, opt.threads);
    const auto received = evm_received_profile_db(model, opt.threads);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        rows.push_back({double(pairs[i].first),
                        double(subcarrier_offset(model.rx.num, pairs[i].second)), induced[i],
                        received[i]});
    }
    write_table(run, "evm_profile", opt.format,
                {"subcarrier", "offset", "evm_induced_db", "evm_received_db"}, rows);

    const ChainSpec& side = model.tx.filtered ? model.tx : model.rx;
    StopbandScan scan = stopband_scan(side.fc, side.mask, 16);
    rows.clear();
    for (std::size_t i = 0; i < scan.omega.size(); ++i)
        rows.push_back({scan.omega[i], db10(scan.level[i])});
    write_table(run, "magnitude_response", opt.format, {"omega_rad", "level_db"}, rows);

    double avg = 0.0;
    for (double v : induced) avg += undb10(v);
    Json summary;
    summary["evm_max_db"] = *std::max_element(induced.begin(), induced.end());
    summary["evm_avg_db"] = db10(avg / double(induced.size()));
    summary["stopband_max_db"] = scan.max_db();

    if (analysis.contains("sblr_guards")) {
        rows.clear();
        for (const Json& g : analysis.at("sblr_guards")) {
            const std::size_t guard = g.get<std::size_t>();
            TmuxModel neighbour = model;
            const std::size_t shift = model.rx.num.active + guard;
            neighbour.tx.fc.center_bin =
                (neighbour.tx.fc.center_bin + shift) % model.long_len;
            neighbour.rx.fc.center_bin =
                (neighbour.rx.fc.center_bin + shift) % model.long_len;
            rows.push_back({double(guard), sblr_db(model, neighbour)});
        }
        write_table(run, "sblr", opt.format, {"guard_subcarriers", "sblr_db"}, rows);
    }
    write_summary(run, summary);
    std::cout << "analyze: EVM_max " << summary["evm_max_db"] << " dB, EVM_avg "
              << summary["evm_avg_db"] << " dB\n";
    return 0;
}

int cmd_psd(const CommonOptions& opt) {
    Run run = start_run("psd", opt);
    LinkScenario scenario = parse_scenario(run.config);
    scenario.seed = run.seed;
    const Json psd_cfg = run.config.value("psd", Json::object());
    const std::size_t realizations = psd_cfg.value("realizations", 100);
    const double rbw = psd_cfg.value("rbw_hz", 30e3);
    if (psd_cfg.contains("symbols")) scenario.symbols = psd_cfg.at("symbols").get<std::size_t>();

    std::vector<cvec> streams(realizations);
    parallel_for(realizations, opt.threads, [&](std::size_t r) {
        streams[r] = transmit_stream(scenario, run.seed + r);
    });
    const PsdEstimate psd = psd_estimate(streams, rbw, scenario.fs_hz);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
        rows.push_back({psd.freq_hz[i], psd.power_db[i]});
    write_table(run, "psd", opt.format, {"freq_hz", "power_db"}, rows);

    Json summary;
    summary["realizations"] = realizations;
    summary["rbw_hz"] = rbw;
    summary["mean_power_dbm"] = mean_power_dbm(streams.front());
    write_summary(run, summary);
    std::cout << "psd: " << realizations << " realizations, rbw " << rbw << " Hz\n";
    return 0;
}

int cmd_linksim(const CommonOptions& opt) {
    Run run = start_run("linksim", opt);
    LinkScenario scenario = parse_scenario(run.config);
    scenario.seed = run.seed;
    const LinkResult result = run_link(scenario);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < result.evm_per_subcarrier_db.size(); ++i)
        rows.push_back({double(i),
                        double(subcarrier_offset(scenario.subbands[scenario.target].num, i)),
                        result.evm_per_subcarrier_db[i]});
    write_table(run, "evm_profile", opt.format, {"subcarrier", "offset", "evm_db"}, rows);

    if (scenario.dump_constellation || run.config.value("link", Json::object())
                                           .value("dump_constellation", false)) {
        scenario.dump_constellation = true;
        const LinkResult dump = run_link(scenario);
        std::ofstream out = open_csv(run, "constellation.csv");
        out << "re,im\n";
        out.precision(12);
        for (const cplx& v : dump.constellation_dump)
            out << v.real() << "," << v.imag() << "\n";
    }

    Json summary;
    summary["evm_db"] = result.evm_db;
    summary["evm_percent"] = 100.0 * std::pow(10.0, result.evm_db / 20.0);
    summary["ser"] = result.ser;
    summary["symbols_measured"] = result.symbols_measured;
    summary["qam_symbols_measured"] = result.qam_symbols_measured;
    if (std::isfinite(result.mean_pa_out_dbm))
        summary["mean_pa_out_dbm"] = result.mean_pa_out_dbm;
    summary["pa_clipped_samples"] = result.pa_clipped_samples;
    summary["interferer_overlaps_target"] = result.interferer_overlaps_target;
    write_summary(run, summary);
    std::cout << "linksim: EVM " << result.evm_db << " dB, SER " << result.ser << "\n";
    return 0;
}

int cmd_complexity(const CommonOptions& opt) {
    Run run = start_run("complexity", opt);
    const Json& cj = run.config.contains("complexity") ? run.config.at("complexity")
                                                       : run.config;
    const std::size_t long_len = cj.value("long_len", 1024);
    if (!cj.contains("rows") || !cj.at("rows").is_array() || cj.at("rows").empty())
        throw ConfigError("complexity: 'rows' must be a non-empty array");

    std::ofstream out = open_csv(run, "complexity.csv");
    out << "label,overlap,fc_muls_per_qam,ratio_vs_ofdm,short_fft,weighting,rotation,long_fft";
    bool have_td = false;
    for (const Json& row : cj.at("rows"))
        if (row.contains("td_fir_len")) have_td = true;
    if (have_td) out << ",td_muls_per_qam";
    out << "\n";
    out.precision(6);

    for (const Json& row : cj.at("rows")) {
        const std::size_t prbs = row.at("prbs").get<std::size_t>();
        const std::size_t short_len = row.at("short_len").get<std::size_t>();
        const std::size_t fft_len = row.at("fft_len").get<std::size_t>();
        const std::size_t cp_len = row.at("cp_len").get<std::size_t>();
        const std::size_t tbw = row.value("transition_bins", 2);
        const std::size_t count = row.value("subbands", 1);
        const std::string label = row.value("label", std::to_string(prbs) + "prb");
        for (const Json& ov : row.value("overlaps", Json::array({0.5, 0.25}))) {
            const double overlap = ov.get<double>();
            FcComplexitySubband s;
            s.short_len = short_len;
            s.short_step = static_cast<std::size_t>(short_len * (1.0 - overlap) + 0.5);
            s.occupied_bins = 12 * prbs + 2 * tbw;
            s.fft_len = fft_len;
            s.cp_len = cp_len;
            s.qam_per_symbol = 12 * prbs;
            const auto rep =
                fc_complexity(std::vector<FcComplexitySubband>(count, s), long_len);
            out << label << "," << overlap << "," << rep.muls_per_qam << ","
                << rep.ratio_vs_plain_ofdm << "," << rep.short_transforms << ","
                << rep.weighting << "," << rep.rotation << "," << rep.long_transform;
            if (have_td) {
                out << ",";
                if (row.contains("td_fir_len"))
                    out << td_filter_muls(fft_len, cp_len, long_len,
                                          row.at("td_fir_len").get<std::size_t>(),
                                          12 * prbs);
            }
            out << "\n";
        }
    }
    write_summary(run, Json{{"rows", cj.at("rows").size()}});
    std::cout << "complexity: table written\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fast-convolution subband waveform engine"};
    app.require_subcommand(1);

    CommonOptions design_opt, analyze_opt, psd_opt, link_opt, complexity_opt;
    add_common(app.add_subcommand("design", "optimize frequency-domain weights"), design_opt);
    add_common(app.add_subcommand("analyze", "EVM / stopband / SBLR tables"), analyze_opt);
    add_common(app.add_subcommand("psd", "averaged transmit spectrum"), psd_opt);
    add_common(app.add_subcommand("linksim", "uncoded link simulation"), link_opt);
    add_common(app.add_subcommand("complexity", "multiplication-rate accounting"),
               complexity_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("design")) return cmd_design(design_opt);
        if (app.got_subcommand("analyze")) return cmd_analyze(analyze_opt);
        if (app.got_subcommand("psd")) return cmd_psd(psd_opt);
        if (app.got_subcommand("linksim")) return cmd_linksim(link_opt);
        if (app.got_subcommand("complexity")) return cmd_complexity(complexity_opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
