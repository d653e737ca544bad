#include "nlwave/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nlwave/field_series.hpp"

namespace nlwave {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_double_list(const std::string& val) {
    std::vector<double> out;
    std::stringstream ss(val);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        const auto c1 = tok.find(':');
        if (c1 != std::string::npos) {  // start:step:stop, inclusive
            const auto c2 = tok.find(':', c1 + 1);
            if (c2 == std::string::npos)
                throw std::invalid_argument("range needs start:step:stop, got " + tok);
            const double start = std::strtod(tok.substr(0, c1).c_str(), nullptr);
            const double step = std::strtod(tok.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
            const double stop = std::strtod(tok.substr(c2 + 1).c_str(), nullptr);
            if (step <= 0) throw std::invalid_argument("range step must be positive: " + tok);
            for (long i = 0;; ++i) {
                const double v = start + static_cast<double>(i) * step;
                if (v > stop + 1e-9 * step) break;
                out.push_back(v);
            }
        } else {
            out.push_back(std::strtod(tok.c_str(), nullptr));
        }
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& val) {
    std::vector<int> out;
    std::stringstream ss(val);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        const auto c = tok.find(':');
        if (c != std::string::npos) {
            const int a = static_cast<int>(std::strtol(tok.substr(0, c).c_str(), nullptr, 10));
            const int b = static_cast<int>(std::strtol(tok.substr(c + 1).c_str(), nullptr, 10));
            for (int i = a; i <= b; ++i) out.push_back(i);
        } else {
            out.push_back(static_cast<int>(std::strtol(tok.c_str(), nullptr, 10)));
        }
    }
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += g17(xs[i]);
    }
    return s;
}

std::string join(const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(xs[i]);
    }
    return s;
}

double parse_double(const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str()) throw std::invalid_argument("not a number: " + v);
    return x;
}

}  // namespace

Microstructure RunConfig::microstructure() const {
    Microstructure ms;
    ms.layer_length = L;
    ms.material_a = {E1, rho};
    ms.material_b = {E2, rho};
    return ms;
}

GridSpec RunConfig::grid_spec() const {
    GridSpec spec;
    spec.dns_dt = dns_dt;
    spec.h = h;
    spec.dt = dt;
    spec.T_tr = T_tr;
    spec.delta = delta;
    return spec;
}

PacketMeasureConfig RunConfig::packet_config() const {
    PacketMeasureConfig pc;
    pc.dns_dt = dns_dt;
    pc.envelope_periods = packet_envelope_periods;
    pc.min_envelope_width = packet_min_envelope_width;
    pc.travel_time = packet_travel_time;
    return pc;
}

train::TrainConfig RunConfig::train_config() const {
    if (c0_auto || curvature_auto)
        throw std::logic_error("train_config: call resolve_effective_params() first");
    train::TrainConfig tc;
    tc.grid = grid_spec();
    tc.degree = M;
    tc.epsilon = epsilon;
    tc.rho = rho;
    tc.c0 = c0;
    tc.curvature = curvature;
    tc.lbfgs_history = lbfgs_history;
    tc.max_iterations = lbfgs_max_iter;
    tc.grad_tol = lbfgs_gtol;
    tc.loss_tol = lbfgs_ftol;
    return tc;
}

void RunConfig::resolve_effective_params() {
    const Microstructure ms = microstructure();
    if (c0_auto) {
        c0 = effective_speed(ms);
        c0_auto = false;
    }
    if (curvature_auto) {
        if (is_homogeneous(ms)) {
            curvature = 0.0;
        } else {
            const EffectiveParams ep = estimate_effective_params(ms, packet_config(), estimate_omegas);
            curvature = ep.curvature;
        }
        curvature_auto = false;
    }
}

void apply_override(RunConfig& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got: " + kv);
    const std::string key = trim(kv.substr(0, eq));
    const std::string val = trim(kv.substr(eq + 1));

    if (key == "L") cfg.L = parse_double(val);
    else if (key == "E1") cfg.E1 = parse_double(val);
    else if (key == "E2") cfg.E2 = parse_double(val);
    else if (key == "rho") cfg.rho = parse_double(val);
    else if (key == "dns_dt") cfg.dns_dt = parse_double(val);
    else if (key == "h") cfg.h = parse_double(val);
    else if (key == "dt") cfg.dt = parse_double(val);
    else if (key == "T_tr") cfg.T_tr = parse_double(val);
    else if (key == "delta") cfg.delta = parse_double(val);
    else if (key == "M") cfg.M = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
    else if (key == "epsilon") cfg.epsilon = parse_double(val);
    else if (key == "lbfgs_history") cfg.lbfgs_history = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
    else if (key == "lbfgs_max_iter") cfg.lbfgs_max_iter = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
    else if (key == "lbfgs_gtol") cfg.lbfgs_gtol = parse_double(val);
    else if (key == "lbfgs_ftol") cfg.lbfgs_ftol = parse_double(val);
    else if (key == "c0") {
        if (val == "auto") cfg.c0_auto = true;
        else { cfg.c0_auto = false; cfg.c0 = parse_double(val); }
    } else if (key == "curvature") {
        if (val == "auto") cfg.curvature_auto = true;
        else { cfg.curvature_auto = false; cfg.curvature = parse_double(val); }
    }
    else if (key == "estimate_omegas") cfg.estimate_omegas = parse_double_list(val);
    else if (key == "vg_omegas") cfg.vg_omegas = parse_double_list(val);
    else if (key == "packet_envelope_periods") cfg.packet_envelope_periods = parse_double(val);
    else if (key == "packet_min_envelope_width") cfg.packet_min_envelope_width = parse_double(val);
    else if (key == "packet_travel_time") cfg.packet_travel_time = parse_double(val);
    else if (key == "source_indices") cfg.source_indices = parse_int_list(val);
    else if (key == "plane_omegas") cfg.plane_omegas = parse_double_list(val);
    else throw std::invalid_argument("unknown configuration key: " + key);
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        try {
            apply_override(cfg, t);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string canonical_config(const RunConfig& c) {
    std::map<std::string, std::string> kv;
    kv["L"] = g17(c.L);
    kv["E1"] = g17(c.E1);
    kv["E2"] = g17(c.E2);
    kv["rho"] = g17(c.rho);
    kv["dns_dt"] = g17(c.dns_dt);
    kv["h"] = g17(c.h);
    kv["dt"] = g17(c.dt);
    kv["T_tr"] = g17(c.T_tr);
    kv["delta"] = g17(c.delta);
    kv["M"] = std::to_string(c.M);
    kv["epsilon"] = g17(c.epsilon);
    kv["lbfgs_history"] = std::to_string(c.lbfgs_history);
    kv["lbfgs_max_iter"] = std::to_string(c.lbfgs_max_iter);
    kv["lbfgs_gtol"] = g17(c.lbfgs_gtol);
    kv["lbfgs_ftol"] = g17(c.lbfgs_ftol);
    kv["c0"] = c.c0_auto ? "auto" : g17(c.c0);
    kv["curvature"] = c.curvature_auto ? "auto" : g17(c.curvature);
    kv["estimate_omegas"] = join(c.estimate_omegas);
    kv["vg_omegas"] = join(c.vg_omegas);
    kv["packet_envelope_periods"] = g17(c.packet_envelope_periods);
    kv["packet_min_envelope_width"] = g17(c.packet_min_envelope_width);
    kv["packet_travel_time"] = g17(c.packet_travel_time);
    kv["source_indices"] = join(c.source_indices);
    kv["plane_omegas"] = join(c.plane_omegas);

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = canonical_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nlwave
