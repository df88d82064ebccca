#include "fcofdm/config.hpp"

#include <filesystem>
#include <fstream>

namespace fcofdm {

const char* const kEngineVersion = "fcofdm-0.9.0";

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const Json& need(const Json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) fail(where, "missing required field '" + key + "'");
    return j.at(key);
}

std::size_t need_uint(const Json& j, const std::string& where, const std::string& key) {
    const Json& v = need(j, where, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        fail(where, "field '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

std::size_t uint_or(const Json& j, const std::string& where, const std::string& key,
                    std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    return need_uint(j, where, key);
}

double need_double(const Json& j, const std::string& where, const std::string& key) {
    const Json& v = need(j, where, key);
    if (!v.is_number()) fail(where, "field '" + key + "' must be a number");
    return v.get<double>();
}

double double_or(const Json& j, const std::string& where, const std::string& key,
                 double fallback) {
    if (!j.contains(key)) return fallback;
    return need_double(j, where, key);
}

bool bool_or(const Json& j, const std::string& where, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) fail(where, "field '" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

std::string string_or(const Json& j, const std::string& where, const std::string& key,
                      const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) fail(where, "field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

}  // namespace

Json merge_configs(Json base, const Json& overlay) {
    if (!overlay.is_object() || !base.is_object()) return overlay;
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            base[it.key()] = merge_configs(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
    return base;
}

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in, nullptr, true, true);  // allow comments
    } catch (const std::exception& e) {
        throw ConfigError("parse error in '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
    if (!doc.contains("include")) return doc;

    const Json inc = doc.at("include");
    doc.erase("include");
    std::vector<std::string> paths;
    if (inc.is_string())
        paths.push_back(inc.get<std::string>());
    else if (inc.is_array())
        for (const Json& p : inc) paths.push_back(p.get<std::string>());
    else
        throw ConfigError("'include' must be a path or an array of paths");

    Json base = Json::object();
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    for (const std::string& p : paths) {
        const std::filesystem::path resolved =
            std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : dir / p;
        base = merge_configs(base, load_config(resolved.string()));
    }
    return merge_configs(base, doc);
}

FcConfig parse_fc(const Json& engine, const Json& subband) {
    FcConfig cfg;
    cfg.long_len = need_uint(engine, "engine", "long_len");
    cfg.long_step = need_uint(engine, "engine", "long_step");
    cfg.short_len = need_uint(subband, "subband", "short_len");
    cfg.short_step = cfg.short_len * cfg.long_step / cfg.long_len;
    cfg.center_bin = uint_or(subband, "subband", "center_bin", 0);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        fail("subband", e.what());
    }
    return cfg;
}

OfdmNumerology parse_numerology(const Json& subband) {
    OfdmNumerology num;
    num.fft_len = need_uint(subband, "subband", "fft_len");
    num.cp_len = need_uint(subband, "subband", "cp_len");
    num.active = need_uint(subband, "subband", "active");
    num.scs_exponent = static_cast<int>(uint_or(subband, "subband", "scs_exponent", 0));
    num.first_cp_extension = uint_or(subband, "subband", "first_cp_extension", 0);
    try {
        num.validate();
    } catch (const std::invalid_argument& e) {
        fail("subband", e.what());
    }
    return num;
}

WeightMask parse_mask(const Json& subband) {
    WeightMask mask;
    mask.short_len = need_uint(subband, "subband", "short_len");
    mask.active_bins = uint_or(subband, "subband", "mask_active_bins",
                               need_uint(subband, "subband", "active"));
    if (subband.contains("mask_file")) {
        auto [cfg, loaded] = load_mask(subband.at("mask_file").get<std::string>());
        if (loaded.short_len != mask.short_len)
            fail("subband", "mask file transform length does not match short_len");
        return loaded;
    }
    if (subband.contains("transition")) {
        const Json& t = subband.at("transition");
        if (!t.is_array()) fail("subband", "'transition' must be an array of weights");
        for (const Json& v : t) mask.transition.push_back(v.get<double>());
    } else {
        mask.transition.assign(uint_or(subband, "subband", "transition_bins", 0), 0.0);
    }
    try {
        mask.validate();
    } catch (const std::invalid_argument& e) {
        fail("subband", e.what());
    }
    return mask;
}

SubbandSignal parse_subband(const Json& engine, const Json& subband) {
    SubbandSignal s;
    const std::string kind = string_or(subband, "subband", "waveform", "fc_f_ofdm");
    if (kind == "fc_f_ofdm")
        s.waveform = WaveformKind::fc_f_ofdm;
    else if (kind == "cp_ofdm")
        s.waveform = WaveformKind::cp_ofdm;
    else if (kind == "wola")
        s.waveform = WaveformKind::wola;
    else if (kind == "f_ofdm")
        s.waveform = WaveformKind::f_ofdm;
    else
        fail("subband", "unknown waveform '" + kind + "'");

    s.num = parse_numerology(subband);
    s.modulation = modulation_from_string(string_or(subband, "subband", "modulation", "qam64"));
    s.dft_spread = bool_or(subband, "subband", "dft_spread", false);
    s.center_bin = uint_or(subband, "subband", "center_bin", 0);
    if (s.waveform == WaveformKind::fc_f_ofdm) {
        s.fc = parse_fc(engine, subband);
        s.mask = parse_mask(subband);
        if (s.num.active > s.mask.active_bins)
            fail("subband", "active subcarriers exceed the mask passband");
    }
    if (s.waveform == WaveformKind::wola)
        s.wola.slope = uint_or(subband, "subband", "wola_slope", 0);
    if (s.waveform == WaveformKind::f_ofdm) {
        s.fir_len = uint_or(subband, "subband", "fir_len", 512);
        s.tone_offset = uint_or(subband, "subband", "tone_offset", 0);
    }
    return s;
}

LinkScenario parse_scenario(const Json& root) {
    const Json& engine = need(root, "config", "engine");
    LinkScenario sc;
    sc.long_len = need_uint(engine, "engine", "long_len");
    sc.long_step = need_uint(engine, "engine", "long_step");
    sc.fs_hz = double_or(engine, "engine", "fs_hz", 15.36e6);

    const Json& subbands = need(root, "config", "subbands");
    if (!subbands.is_array() || subbands.empty())
        fail("config", "'subbands' must be a non-empty array");
    for (const Json& sb : subbands) sc.subbands.push_back(parse_subband(engine, sb));

    const Json link = root.value("link", Json::object());
    sc.target = uint_or(link, "link", "target", 0);
    if (sc.target >= sc.subbands.size()) fail("link", "target subband index out of range");
    sc.symbols = uint_or(link, "link", "symbols", 140);
    sc.symbols_per_subframe = uint_or(link, "link", "symbols_per_subframe", 0);
    sc.guard_samples = uint_or(link, "link", "guard_samples", 0);
    sc.rc_truncate_transients = bool_or(link, "link", "rc_truncate", false);
    sc.warmup_symbols = uint_or(link, "link", "warmup_symbols", 2);
    sc.equalize = bool_or(link, "link", "equalize", false);
    if (link.contains("snr_db")) sc.snr_db = need_double(link, "link", "snr_db");
    if (link.contains("rx_window_offset"))
        sc.rx_window_offset = need_uint(link, "link", "rx_window_offset");

    const std::string pa = string_or(link, "link", "pa", "none");
    if (pa == "none")
        sc.pa = PaKind::none;
    else if (pa == "rapp")
        sc.pa = PaKind::rapp;
    else if (pa == "poly")
        sc.pa = PaKind::poly;
    else
        fail("link", "unknown pa '" + pa + "'");
    sc.ibo_db = double_or(link, "link", "ibo_db", 11.6);

    if (link.contains("channel_taps")) {
        for (const Json& tap : link.at("channel_taps")) {
            if (!tap.is_array() || tap.size() != 2) fail("link", "channel taps are [re, im] pairs");
            sc.channel_taps.emplace_back(tap[0].get<double>(), tap[1].get<double>());
        }
    } else if (link.contains("channel_rms_delay_spread")) {
        sc.channel_taps = exponential_channel(
            need_double(link, "link", "channel_rms_delay_spread"),
            uint_or(link, "link", "channel_seed", 1));
    }

    if (link.contains("interferer")) {
        const Json& ij = link.at("interferer");
        InterfererSpec intf;
        const Json& isubs = need(ij, "interferer", "subbands");
        for (const Json& sb : isubs) intf.subbands.push_back(parse_subband(engine, sb));
        intf.time_offset = static_cast<long long>(double_or(ij, "interferer", "time_offset", 0));
        intf.power_offset_db = double_or(ij, "interferer", "power_offset_db", 0.0);
        const std::string ipa = string_or(ij, "interferer", "pa", "none");
        intf.pa = ipa == "rapp" ? PaKind::rapp : (ipa == "poly" ? PaKind::poly : PaKind::none);
        intf.ibo_db = double_or(ij, "interferer", "ibo_db", 8.0);
        sc.interferer = std::move(intf);
    }
    sc.seed = uint_or(root, "config", "seed", 1);
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        fail("link", e.what());
    }
    return sc;
}

FilterMode parse_filter_mode(const std::string& name) {
    if (name == "two_sided") return FilterMode::two_sided;
    if (name == "tx_only") return FilterMode::tx_only;
    if (name == "rx_only") return FilterMode::rx_only;
    throw ConfigError("unknown filter mode '" + name + "'");
}

TmuxModel build_model(const Json& root, std::size_t subband_index, FilterMode mode) {
    const Json& engine = need(root, "config", "engine");
    const Json& subbands = need(root, "config", "subbands");
    if (!subbands.is_array() || subband_index >= subbands.size())
        fail("config", "subband index out of range");
    const Json& sb = subbands.at(subband_index);

    TmuxModel model;
    model.long_len = need_uint(engine, "engine", "long_len");
    model.long_step = need_uint(engine, "engine", "long_step");

    ChainSpec filtered;
    filtered.filtered = true;
    filtered.fc = parse_fc(engine, sb);
    filtered.mask = parse_mask(sb);
    filtered.num = parse_numerology(sb);

    // plain counterpart at the high rate with the same subcarrier grid
    ChainSpec plain;
    plain.filtered = false;
    plain.num = filtered.num;
    const std::size_t rate = model.long_len / filtered.fc.short_len;
    plain.num.fft_len = filtered.num.fft_len * rate;
    plain.num.cp_len = filtered.num.cp_len * rate;
    plain.num.first_cp_extension = filtered.num.first_cp_extension * rate;
    if (mode != FilterMode::two_sided && filtered.fc.center_bin != 0)
        fail("config", "one-sided analysis needs the subband at the carrier center");

    model.tx = mode == FilterMode::rx_only ? plain : filtered;
    model.rx = mode == FilterMode::tx_only ? plain : filtered;
    model.alignment_average = bool_or(root.value("analysis", Json::object()), "analysis",
                                      "alignment_average", true);
    model.validate();
    return model;
}

DesignProblem parse_design(const Json& root) {
    const Json design = root.value("design", Json::object());
    DesignProblem problem;
    const std::string mode_name = string_or(design, "design", "mode", "two_sided");
    const FilterMode mode = parse_filter_mode(mode_name);

    Json patched = root;
    const std::size_t index = uint_or(design, "design", "subband", 0);
    Json& sb = patched.at("subbands").at(index);
    if (design.contains("transition_bins")) {
        sb.erase("transition");
        sb["transition_bins"] = design.at("transition_bins");
    }
    if (mode != FilterMode::two_sided && uint_or(sb, "subband", "center_bin", 0) != 0)
        sb["center_bin"] = 0;

    problem.model = build_model(patched, index, mode);
    problem.stopband_atten_db = double_or(design, "design", "stopband_atten_db", 10.0);
    problem.grid_points_per_bin = uint_or(design, "design", "grid_points_per_bin", 16);
    problem.restarts = uint_or(design, "design", "restarts", 8);
    problem.max_evals = uint_or(design, "design", "max_evals", 600);
    problem.objective_tol_db = double_or(design, "design", "objective_tol_db", 1e-4);
    problem.simplex_tol = double_or(design, "design", "simplex_tol", 1e-6);
    problem.seed = uint_or(root, "config", "seed", 1);
    const std::size_t tbw = problem.model.tx.filtered
                                ? problem.model.tx.mask.transition_bins()
                                : problem.model.rx.mask.transition_bins();
    if (tbw > 7) fail("design", "transition_bins must be at most 7");
    return problem;
}

std::string run_id(const Json& root, std::uint64_t seed) {
    const std::string text = root.dump();
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fcofdm
