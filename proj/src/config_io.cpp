#include "gfm/config_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gfm {

namespace {

using nlohmann::json;

// Strict-object helper: fields are consumed as they are read so leftovers can
// be reported as unknown keys with their full path.
class Section {
  public:
    Section(json& node, std::string path) : node_(node), path_(std::move(path)) {}

    double num(const char* key, double def) {
        if (!node_.contains(key)) return def;
        return take_number(key);
    }
    double num_required(const char* key) {
        if (!node_.contains(key))
            throw ConfigError("missing required field: " + path_ + "." + key);
        return take_number(key);
    }
    long integer(const char* key, long def) {
        if (!node_.contains(key)) return def;
        json v = take(key);
        if (!v.is_number_integer())
            throw ConfigError("field " + path_ + "." + key + " must be an integer");
        return v.get<long>();
    }
    std::string text(const char* key, const std::string& def) {
        if (!node_.contains(key)) return def;
        json v = take(key);
        if (!v.is_string())
            throw ConfigError("field " + path_ + "." + key + " must be a string");
        return v.get<std::string>();
    }
    bool has(const char* key) const { return node_.contains(key); }
    json take(const char* key) {
        json v = node_.at(key);
        node_.erase(key);
        return v;
    }
    json object(const char* key) {
        if (!node_.contains(key)) return json::object();
        json v = take(key);
        if (!v.is_object())
            throw ConfigError("field " + path_ + "." + key + " must be an object");
        return v;
    }
    void finish() const {
        if (!node_.empty())
            throw ConfigError("unknown key: " + path_ + "." + node_.begin().key());
    }
    const std::string& path() const { return path_; }

  private:
    double take_number(const char* key) {
        json v = take(key);
        if (!v.is_number())
            throw ConfigError("field " + path_ + "." + key + " must be a number");
        return v.get<double>();
    }
    json& node_;
    std::string path_;
};

void require_positive(double v, const std::string& field) {
    if (!(v > 0.0)) throw ConfigError("field " + field + " must be positive");
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write file: " + path);
    out << text;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

LoadedScenario parse_scenario(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": not valid JSON: " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

    LoadedScenario ls;
    ScenarioConfig& cfg = ls.cfg;
    Section top(root, "config");

    cfg.name = top.text("name", "scenario");
    cfg.duration = top.num("duration", 1.5);
    require_positive(cfg.duration, "config.duration");

    // Grid strength: either an SCR (line impedance 1/scr) or an explicit
    // per-unit line reactance, never both.
    json plant_obj = top.object("plant");
    Section plant(plant_obj, "config.plant");
    const bool has_scr = top.has("scr");
    const bool has_z = plant.has("z_line");
    if (has_scr && has_z)
        throw ConfigError("config.scr and config.plant.z_line are mutually exclusive");
    cfg.scr = has_scr ? top.num("scr", 0.0) : 0.0;
    if (has_scr && cfg.scr <= 1.0) throw ConfigError("field config.scr must exceed 1");

    cfg.plant.l_cf = plant.num("l_cf", 0.05);
    cfg.plant.l_gf = plant.num("l_gf", 0.06);
    cfg.plant.c_f = plant.num("c_f", 0.02);
    cfg.plant.r_parasitic = plant.num("r_parasitic", 0.005);
    cfg.plant.z_line = plant.num("z_line", 0.2);
    cfg.plant.grid_v = plant.num("grid_v", 1.0);
    plant.finish();
    require_positive(cfg.plant.l_cf, "config.plant.l_cf");
    require_positive(cfg.plant.l_gf, "config.plant.l_gf");
    require_positive(cfg.plant.c_f, "config.plant.c_f");
    const double z_eff = has_scr ? 1.0 / cfg.scr : cfg.plant.z_line;
    if (z_eff < 0.02 - 1e-12 || z_eff > 0.5 + 1e-12)
        throw ConfigError(has_scr
                              ? "field config.scr implies a line impedance outside [0.02, 0.5] pu"
                              : "field config.plant.z_line must be within [0.02, 0.5] pu");

    json sp = top.object("setpoints");
    Section setp(sp, "config.setpoints");
    cfg.setpoints.p_s = setp.num("p_s", 1.0);
    cfg.setpoints.q_s = setp.num("q_s", 0.0);
    setp.finish();

    if (top.has("fault")) {
        json f = top.object("fault");
        Section fault(f, "config.fault");
        cfg.fault.enabled = true;
        cfg.fault.t_on = fault.num("t_on", 0.5);
        cfg.fault.t_clear = fault.num("t_clear", 0.65);
        cfg.fault.retained_voltage = fault.num("retained_voltage", 0.3);
        cfg.fault.fault_impedance = fault.num("impedance", 0.04);
        fault.finish();
        if (!(cfg.fault.t_on < cfg.fault.t_clear))
            throw ConfigError("field config.fault.t_on must precede t_clear");
        if (cfg.fault.retained_voltage < 0.0 || cfg.fault.retained_voltage > 1.0)
            throw ConfigError("field config.fault.retained_voltage must be within [0, 1]");
        require_positive(cfg.fault.fault_impedance, "config.fault.impedance");
        if (cfg.duration <= cfg.fault.t_clear)
            throw ConfigError("field config.duration must exceed config.fault.t_clear");
    }

    // Control parameters are configured in SI (the units the hardware tables
    // use) and resolved to per-unit on the base below.
    json ctrl = top.object("control");
    Section c(ctrl, "config.control");
    const double f_control = c.num("f_control", 10000.0);
    const long substeps = c.integer("plant_substeps", 10);
    const double d_p_si = c.num("d_p_si", 0.0);        // W per rad/s
    const double d_q_si = c.num("d_q_si", 108.0);      // var per V
    const double r_v = c.num("r_v", 0.107);            // pu
    const double l_v = c.num("l_v", 0.375);            // pu
    const double k_p_cc_si = c.num("k_p_cc_si", 25.0);     // V per A
    const double k_r_cc_si = c.num("k_r_cc_si", 2000.0);   // V per A per s
    const double h_const = c.num("h", 2.0);            // s
    const double zeta = c.num("zeta", 0.5627);
    const double k_pp_si = c.num("k_pp_si", 1.16e-3);  // rad/s per W
    const double k_ip_si = c.num("k_ip_si", 5.86e-3);  // rad/s^2 per W
    const double rpc_zeta = c.num("rpc_zeta", 0.5627);
    const double rpc_omega_n = c.num("rpc_omega_n", 25.45);  // rad/s
    const double l_eq_si = c.num("l_eq_si", 29.5e-3);  // H
    const double e_en_si = c.num("e_en_si", 400.0);    // V (phase peak)
    const double i_lim = c.num("i_lim", 1.2);          // pu
    const double e_max_factor = c.num("e_max_factor", 1.3);
    const double v_star = c.num("v_star", 1.0);        // pu
    c.finish();
    require_positive(f_control, "config.control.f_control");
    if (substeps < 1) throw ConfigError("field config.control.plant_substeps must be >= 1");
    require_positive(r_v, "config.control.r_v");
    require_positive(l_v, "config.control.l_v");
    require_positive(i_lim, "config.control.i_lim");
    require_positive(l_eq_si, "config.control.l_eq_si");
    require_positive(e_en_si, "config.control.e_en_si");
    if (h_const < 2.0 || h_const > 5.0)
        std::cerr << "note: config.control.h = " << h_const
                  << " is outside the usual [2, 5] s range\n";

    json b = top.object("base");
    Section base(b, "config.base");
    const double f_nominal = base.num("f_nominal", 50.0);
    require_positive(f_nominal, "config.base.f_nominal");
    const double omega0 = 2.0 * kPi * f_nominal;
    const double v_base = base.num("v_base", 400.0);
    require_positive(v_base, "config.base.v_base");
    // Default rated power makes the rated-power loop gains self-consistent
    // with the inertia constant: s = omega0 / (2 h k_ip).
    const double s_rated = base.num("s_rated", omega0 / (2.0 * h_const * k_ip_si));
    require_positive(s_rated, "config.base.s_rated");
    base.finish();

    cfg.base = PerUnitBase{s_rated, v_base, omega0};
    const double z_base = cfg.base.z_base();
    cfg.plant.omega0 = omega0;

    SpcParams& sc = cfg.spc;
    sc.omega0 = omega0;
    sc.omega_star = omega0;
    sc.v_star = v_star;
    sc.d_p = d_p_si / s_rated;  // W per rad/s -> pu per rad/s
    sc.d_q = d_q_si * v_base / s_rated;
    sc.r_v = r_v;
    sc.l_v = l_v;
    sc.k_p_cc = k_p_cc_si / z_base;
    sc.k_r_cc = k_r_cc_si / z_base;
    sc.h = h_const;
    sc.zeta = zeta;
    sc.k_pp = k_pp_si * s_rated;
    sc.k_ip = k_ip_si * s_rated;
    const double g_q_si = 1.5 * e_en_si / (omega0 * l_eq_si);  // var per V
    sc.k_pq = (2.0 * rpc_zeta * rpc_omega_n / g_q_si) * s_rated / v_base;
    sc.k_iq = (rpc_omega_n * rpc_omega_n / g_q_si) * s_rated / v_base;
    sc.e_en = e_en_si / v_base;
    sc.e_max = e_max_factor * sc.e_en;
    sc.i_lim = i_lim;
    // Linearized power-transfer gain at the nominal operating point.
    sc.p_max = 1.5 * e_en_si * v_base * cfg.plant.grid_v / (omega0 * l_eq_si) / s_rated;

    json fmj = top.object("faultmode");
    Section fm(fmj, "config.faultmode");
    FaultModeParams& fp = cfg.faultmode;
    fp.v_threshold = fm.num("v_threshold", 0.9);
    fp.debounce = fm.num("debounce", 1e-3);
    fp.recovery_hold = fm.num("recovery_hold", 0.15);
    fp.p_diff_threshold = fm.num("p_diff_threshold", 0.05);
    fp.damping_x = fm.num("damping_x", 1.0);
    fp.t_d = fm.num("t_d", 0.05);
    fp.prl_slope = fm.num("prl_slope", 10000.0);
    fp.nrl_ramp_time = fm.num("nrl_ramp_time", 0.01);
    const std::string trig = fm.text("damping_trigger", "voltage_restoration");
    if (trig == "voltage_restoration")
        fp.trigger = DampingTrigger::voltage_restoration;
    else if (trig == "mode_exit")
        fp.trigger = DampingTrigger::mode_exit;
    else
        throw ConfigError(
            "field config.faultmode.damping_trigger must be "
            "\"voltage_restoration\" or \"mode_exit\"");
    fm.finish();
    if (!(fp.v_threshold > 0.0 && fp.v_threshold < 1.0))
        throw ConfigError("field config.faultmode.v_threshold must be within (0, 1)");
    require_positive(fp.debounce, "config.faultmode.debounce");
    require_positive(fp.recovery_hold, "config.faultmode.recovery_hold");
    require_positive(fp.t_d, "config.faultmode.t_d");
    require_positive(fp.prl_slope, "config.faultmode.prl_slope");
    require_positive(fp.nrl_ramp_time, "config.faultmode.nrl_ramp_time");
    if (fp.damping_x < 0.0)
        throw ConfigError("field config.faultmode.damping_x must be >= 0");

    json outj = top.object("output");
    Section outp(outj, "config.output");
    cfg.decimate = static_cast<int>(outp.integer("decimate", 1));
    outp.finish();
    if (cfg.decimate < 1) throw ConfigError("field config.output.decimate must be >= 1");

    cfg.timing.f_control = f_control;
    cfg.timing.plant_substeps = static_cast<int>(substeps);

    top.finish();

    // Fully resolved form: every default expanded, reparsing is the identity.
    json r;
    r["name"] = cfg.name;
    r["duration"] = cfg.duration;
    if (has_scr)
        r["scr"] = cfg.scr;
    r["setpoints"] = {{"p_s", cfg.setpoints.p_s}, {"q_s", cfg.setpoints.q_s}};
    if (cfg.fault.enabled)
        r["fault"] = {{"t_on", cfg.fault.t_on},
                      {"t_clear", cfg.fault.t_clear},
                      {"retained_voltage", cfg.fault.retained_voltage},
                      {"impedance", cfg.fault.fault_impedance}};
    r["base"] = {{"f_nominal", f_nominal}, {"v_base", v_base}, {"s_rated", s_rated}};
    json rp = {{"l_cf", cfg.plant.l_cf},
               {"l_gf", cfg.plant.l_gf},
               {"c_f", cfg.plant.c_f},
               {"r_parasitic", cfg.plant.r_parasitic},
               {"grid_v", cfg.plant.grid_v}};
    if (!has_scr) rp["z_line"] = cfg.plant.z_line;
    r["plant"] = rp;
    r["control"] = {{"f_control", f_control},
                    {"plant_substeps", substeps},
                    {"d_p_si", d_p_si},
                    {"d_q_si", d_q_si},
                    {"r_v", r_v},
                    {"l_v", l_v},
                    {"k_p_cc_si", k_p_cc_si},
                    {"k_r_cc_si", k_r_cc_si},
                    {"h", h_const},
                    {"zeta", zeta},
                    {"k_pp_si", k_pp_si},
                    {"k_ip_si", k_ip_si},
                    {"rpc_zeta", rpc_zeta},
                    {"rpc_omega_n", rpc_omega_n},
                    {"l_eq_si", l_eq_si},
                    {"e_en_si", e_en_si},
                    {"i_lim", i_lim},
                    {"e_max_factor", e_max_factor},
                    {"v_star", v_star}};
    r["faultmode"] = {{"v_threshold", fp.v_threshold},
                      {"debounce", fp.debounce},
                      {"recovery_hold", fp.recovery_hold},
                      {"p_diff_threshold", fp.p_diff_threshold},
                      {"damping_x", fp.damping_x},
                      {"t_d", fp.t_d},
                      {"prl_slope", fp.prl_slope},
                      {"nrl_ramp_time", fp.nrl_ramp_time},
                      {"damping_trigger", trig}};
    r["output"] = {{"decimate", cfg.decimate}};
    ls.resolved = std::move(r);
    return ls;
}

LoadedScenario load_scenario_file(const std::string& path) {
    const std::string text = read_text_file(path);
    json probe;
    try {
        probe = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": not valid JSON: " + e.what());
    }
    if (probe.is_object() && probe.contains("resolved_config"))
        return parse_scenario(probe["resolved_config"].dump(), path + " (manifest)");
    return parse_scenario(text, path);
}

void apply_decimate(LoadedScenario& ls, int decimate) {
    if (decimate < 1) throw ConfigError("decimate must be >= 1");
    ls.cfg.decimate = decimate;
    ls.resolved["output"]["decimate"] = decimate;
}

nlohmann::ordered_json metrics_to_json(const ScenarioMetrics& m, const TimeSeries& ts,
                                       const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema_version"] = kMetricsSchemaVersion;
    j["scenario"] = cfg.name;
    j["samples"] = ts.size();
    j["sample_dt"] = ts.sample_dt;
    j["diverged"] = ts.diverged;
    if (ts.diverged) j["diagnostic"] = ts.diagnostic;
    j["peak_i_c"] = {{"value", m.peak_i_c.value}, {"t", m.peak_i_c.t}};
    j["peak_i_g"] = {{"value", m.peak_i_g.value}, {"t", m.peak_i_g.t}};
    j["peak_i_ref"] = m.peak_i_ref;
    j["limiter"] = {{"engaged", m.limiter_engaged},
                    {"first_t", m.limiter_first_t},
                    {"samples", m.limiter_samples}};
    nlohmann::ordered_json ev = nlohmann::ordered_json::array();
    for (const auto& e : m.fm_events)
        ev.push_back({{"t", e.t}, {"to", e.to == Mode::Fault ? "fault" : "normal"}});
    j["fm_transitions"] = ev;
    j["final"] = {{"p", m.final_p},
                  {"q", m.final_q},
                  {"omega", m.final_omega},
                  {"e_mag", m.final_e_mag}};
    if (m.p_recovery_error) j["p_recovery_error"] = *m.p_recovery_error;
    if (m.recovery_iq_swing) j["recovery_iq_swing"] = *m.recovery_iq_swing;
    if (m.p_settling_time) j["p_settling_time"] = *m.p_settling_time;
    return j;
}

nlohmann::ordered_json make_manifest(
    const LoadedScenario& ls, const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& outputs, long wall_ms) {
    nlohmann::ordered_json j;
    j["manifest_version"] = 1;
    j["tool"] = "gfmsim";
    j["tool_version"] = kToolVersion;
    j["config_path"] = config_path;
    j["resolved_config"] = ls.resolved;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [name, bytes] : outputs)
        files.push_back({{"file", name},
                         {"bytes", bytes.size()},
                         {"fnv1a64", fnv1a64_hex(bytes)}});
    j["outputs"] = files;
    j["wall_ms"] = wall_ms;
    return j;
}

}  // namespace gfm
