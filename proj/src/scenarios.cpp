#include "nlwave/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "nlwave/dns.hpp"
#include "nlwave/nonlocal.hpp"
#include "nlwave/parallel.hpp"

namespace nlwave {

namespace {
constexpr double kSourceT0 = 0.8;
constexpr double kSourceTp = 0.8;

std::string format_param(ScenarioKind kind, double param) {
    char buf[32];
    if (kind == ScenarioKind::OscillatingSource)
        std::snprintf(buf, sizeof(buf), "%02d", static_cast<int>(std::lround(param)));
    else
        std::snprintf(buf, sizeof(buf), "%.2f", param);
    return buf;
}
}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::OscillatingSource: return "oscillating_source";
        case ScenarioKind::PlaneWave: return "plane_wave";
        case ScenarioKind::WavePacket: return "wave_packet";
        case ScenarioKind::Impact: return "impact";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "oscillating_source") return ScenarioKind::OscillatingSource;
    if (s == "plane_wave") return ScenarioKind::PlaneWave;
    if (s == "wave_packet") return ScenarioKind::WavePacket;
    if (s == "impact") return ScenarioKind::Impact;
    throw std::invalid_argument("unknown scenario kind: " + s);
}

Scenario oscillating_source(int k, const Microstructure& ms) {
    Scenario sc;
    sc.kind = ScenarioKind::OscillatingSource;
    sc.param = k;
    sc.b = dns::snap_half_width(ms, 50.0);
    sc.duration = 2.0;
    if (k < 1) throw std::invalid_argument("oscillating_source: k must be a positive integer");
    if (k > 20) sc.warnings.push_back("source index k=" + std::to_string(k) + " outside 1..20");
    const double kl = static_cast<double>(k) * ms.layer_length;
    sc.forcing = [kl](double x, double t) {
        const double env_x = 2.0 * x / (5.0 * kl);
        const double env_t = (t - kSourceT0) / kSourceTp;
        const double c = std::cos(2.0 * std::numbers::pi * x / kl);
        return std::exp(-env_x * env_x) * std::exp(-env_t * env_t) * c * c;
    };
    return sc;
}

Scenario plane_wave(double omega, const Microstructure& ms) {
    Scenario sc;
    sc.kind = ScenarioKind::PlaneWave;
    sc.param = omega;
    sc.b = dns::snap_half_width(ms, 50.0);
    sc.duration = 2.0;
    if (omega <= 0) throw std::invalid_argument("plane_wave: omega must be positive");
    const double idx = omega / 0.35;
    if (omega > 3.85 + 1e-9 || std::abs(idx - std::round(idx)) > 1e-6)
        sc.warnings.push_back("omega=" + g17(omega) + " outside the 0.35..3.85 grid");
    sc.left_velocity = [omega](double t) { return std::sin(omega * t); };
    return sc;
}

Scenario wave_packet(double omega, const Microstructure& ms) {
    Scenario sc;
    sc.kind = ScenarioKind::WavePacket;
    sc.param = omega;
    sc.b = dns::snap_half_width(ms, 133.3);
    sc.duration = 320.0;
    if (omega <= 0) throw std::invalid_argument("wave_packet: omega must be positive");
    if (omega != 2.0 && omega != 3.9 && omega != 5.0)
        sc.warnings.push_back("omega=" + g17(omega) + " outside {2, 3.9, 5}");
    sc.left_velocity = [omega](double t) {
        const double e = t / 5.0 - 3.0;
        return std::sin(omega * t) * std::exp(-e * e);
    };
    return sc;
}

Scenario impact(const Microstructure& ms) {
    Scenario sc;
    sc.kind = ScenarioKind::Impact;
    sc.b = dns::snap_half_width(ms, 266.6);
    sc.duration = 600.0;
    const double b = sc.b;
    sc.initial_velocity = [b](double x) { return (x <= -b + 1.6) ? 1.0 : 0.0; };
    return sc;
}

Scenario make_scenario(ScenarioKind kind, double param, const Microstructure& ms) {
    switch (kind) {
        case ScenarioKind::OscillatingSource:
            return oscillating_source(static_cast<int>(std::lround(param)), ms);
        case ScenarioKind::PlaneWave: return plane_wave(param, ms);
        case ScenarioKind::WavePacket: return wave_packet(param, ms);
        case ScenarioKind::Impact: return impact(ms);
    }
    throw std::invalid_argument("make_scenario: bad kind");
}

namespace {

/// DNS solution of the scenario sampled at the given positions and the
/// solver step dt, times 0..T_end.
FieldSeries dns_reference(const Scenario& sc, const Microstructure& ms, const GridSpec& spec,
                          const std::vector<double>& positions, double T_end) {
    const dns::DnsGrid grid = dns::build_grid(ms, sc.b, spec.dns_dt);
    dns::BoundaryDrive drive;
    if (sc.left_velocity) {
        drive.left = dns::EndKind::Prescribed;
        drive.left_velocity = sc.left_velocity;
    }
    dns::InitialCondition ic;
    ic.v0 = sc.initial_velocity;

    const double stride_real = spec.dt / spec.dns_dt;
    const auto stride = static_cast<std::size_t>(std::llround(stride_real));
    if (stride == 0 || std::abs(stride_real - static_cast<double>(stride)) > 1e-9)
        throw std::invalid_argument("make_sample: dt must be an integer multiple of the DNS dt");

    dns::SeriesRecorder rec(positions, stride);
    std::vector<dns::Recorder*> recs{&rec};
    dns::run(grid, drive, sc.forcing, ic, T_end, recs);
    return rec.take();
}

}  // namespace

TrainingSample make_sample(const Scenario& sc, const Microstructure& ms, const GridSpec& spec) {
    if (sc.kind == ScenarioKind::WavePacket || sc.kind == ScenarioKind::Impact)
        throw std::invalid_argument("make_sample: training uses oscillating-source and plane-wave data only");

    const double n_steps_real = spec.T_tr / spec.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(n_steps_real));
    if (n_steps == 0 || std::abs(n_steps_real - static_cast<double>(n_steps)) > 1e-9)
        throw std::invalid_argument("make_sample: T_tr/dt must be a positive integer");

    const nonlocal::UniformGrid g = nonlocal::make_grid(sc.b - spec.delta, spec.h, spec.delta);
    FieldSeries full = dns_reference(sc, ms, spec, g.x, spec.T_tr + spec.dt);

    // L2 norm over the interior and times dt..T_tr.
    double sq = 0.0;
    for (std::size_t n = 1; n <= n_steps; ++n) {
        const double* row = full.u_row(n);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) sq += row[i] * row[i];
    }
    const double norm = std::sqrt(sq * spec.h * spec.dt);
    if (norm <= 0.0 || !std::isfinite(norm))
        throw std::runtime_error("make_sample: reference solution has zero norm for scenario " +
                                 to_string(sc.kind) + ":" + g17(sc.param));
    for (double& x : full.u) x /= norm;
    for (double& x : full.v) x /= norm;

    TrainingSample out;
    out.id = (sc.kind == ScenarioKind::OscillatingSource ? "src_" : "pw_") +
             format_param(sc.kind, sc.param);
    out.kind = sc.kind;
    out.param = sc.param;
    out.b_dns = sc.b;
    out.b_interior = sc.b - spec.delta;
    out.T_tr = spec.T_tr;
    out.norm_constant = norm;

    std::vector<double> interior_x(full.positions.begin() + static_cast<std::ptrdiff_t>(g.interior_lo),
                                   full.positions.begin() + static_cast<std::ptrdiff_t>(g.interior_hi) + 1);
    std::vector<double> ref_times(full.times.begin() + 1, full.times.end());
    out.reference = resample(full, interior_x, ref_times);

    out.forcing_rows = n_steps + 1;  // t^0..t^{T_tr/dt}
    if (sc.forcing) {
        out.forcing.resize(out.forcing_rows * interior_x.size());
        for (std::size_t n = 0; n < out.forcing_rows; ++n) {
            const double t = static_cast<double>(n) * spec.dt;
            for (std::size_t i = 0; i < interior_x.size(); ++i)
                out.forcing[n * interior_x.size() + i] = sc.forcing(interior_x[i], t) / norm;
        }
    }

    if (sc.kind == ScenarioKind::PlaneWave) {
        // The wave enters through the layer; keep the DNS collar data.
        std::vector<double> collar_x;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (i < g.interior_lo || i > g.interior_hi) collar_x.push_back(g.x[i]);
        auto collar = std::make_shared<FieldSeries>(resample(full, collar_x, full.times));
        out.source = std::move(collar);
    }
    return out;
}

std::vector<Scenario> training_scenarios(const Microstructure& ms,
                                         const std::vector<int>& source_indices,
                                         const std::vector<double>& plane_omegas) {
    std::vector<Scenario> out;
    out.reserve(source_indices.size() + plane_omegas.size());
    for (int k : source_indices) out.push_back(oscillating_source(k, ms));
    for (double w : plane_omegas) out.push_back(plane_wave(w, ms));
    return out;
}

std::vector<TrainingSample> build_training_set(const std::vector<Scenario>& scenarios,
                                               const Microstructure& ms, const GridSpec& spec) {
    std::vector<TrainingSample> out(scenarios.size());
    parallel_for(scenarios.size(), [&](std::size_t i) {
        out[i] = make_sample(scenarios[i], ms, spec);
    });
    return out;
}

namespace {

/// Full-grid normalized series reassembled from a sample (inverse of the
/// split done by make_sample); used for the on-disk format.
FieldSeries sample_to_full_series(const TrainingSample& s, const GridSpec& spec) {
    const nonlocal::UniformGrid g = nonlocal::make_grid(s.b_interior, spec.h, spec.delta);
    FieldSeries full;
    full.positions = g.x;
    full.uniform = true;
    full.h = spec.h;
    full.dt = spec.dt;
    full.half_width = s.b_dns;
    const std::size_t nt = s.reference.nt() + 1;  // add back the t=0 row
    full.times.resize(nt);
    for (std::size_t n = 0; n < nt; ++n) full.times[n] = static_cast<double>(n) * spec.dt;
    full.u.assign(nt * g.size(), 0.0);
    full.v.assign(nt * g.size(), 0.0);
    for (std::size_t n = 1; n < nt; ++n) {
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) {
            full.u[n * g.size() + i] = s.reference.u_at(n - 1, i - g.interior_lo);
            full.v[n * g.size() + i] = s.reference.v_at(n - 1, i - g.interior_lo);
        }
        if (s.source) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (i >= g.interior_lo && i <= g.interior_hi) continue;
                full.u[n * g.size() + i] = s.source->u_at(n, c);
                full.v[n * g.size() + i] = s.source->v_at(n, c);
                ++c;
            }
        }
    }
    return full;
}

}  // namespace

void write_training_set(const std::string& dir, const std::vector<TrainingSample>& samples,
                        const Microstructure& ms, const GridSpec& spec,
                        const std::string& config_id) {
    (void)ms;
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir + "/manifest.csv");
    if (!mf) throw std::runtime_error("cannot open for writing: " + dir + "/manifest.csv");
    if (!config_id.empty()) mf << "# config=" << config_id << "\n";
    mf << "# quadrature=uniform-endpoint\n";
    mf << "id,kind,param,b,T_tr,norm_constant,file\n";
    for (const auto& s : samples) {
        const std::string file = "sample_" + s.id + ".csv";
        mf << s.id << ',' << to_string(s.kind) << ',' << g17(s.param) << ',' << g17(s.b_dns)
           << ',' << g17(s.T_tr) << ',' << g17(s.norm_constant) << ',' << file << "\n";
        write_field_csv(dir + "/" + file, sample_to_full_series(s, spec), config_id);
    }
    if (!mf) throw std::runtime_error("write failed: " + dir + "/manifest.csv");
}

std::vector<TrainingSample> read_training_set(const std::string& manifest_path,
                                              const Microstructure& ms, const GridSpec& spec) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open: " + manifest_path);
    const std::string dir = std::filesystem::path(manifest_path).parent_path().string();

    std::vector<TrainingSample> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(mf, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> cols;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            cols.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cols.size() != 7) throw std::runtime_error("malformed manifest row: " + line);

        TrainingSample s;
        s.id = cols[0];
        s.kind = scenario_kind_from_string(cols[1]);
        s.param = std::strtod(cols[2].c_str(), nullptr);
        s.b_dns = std::strtod(cols[3].c_str(), nullptr);
        s.T_tr = std::strtod(cols[4].c_str(), nullptr);
        s.norm_constant = std::strtod(cols[5].c_str(), nullptr);
        s.b_interior = s.b_dns - spec.delta;

        const FieldSeries full = read_field_csv((dir.empty() ? "." : dir) + "/" + cols[6]);
        const nonlocal::UniformGrid g = nonlocal::make_grid(s.b_interior, spec.h, spec.delta);
        if (full.nx() != g.size())
            throw std::runtime_error("sample file grid mismatch for " + s.id);

        std::vector<double> interior_x(g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_lo),
                                       g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_hi) + 1);
        std::vector<double> ref_times(full.times.begin() + 1, full.times.end());
        s.reference = resample(full, interior_x, ref_times);

        const auto n_steps = static_cast<std::size_t>(std::llround(s.T_tr / spec.dt));
        s.forcing_rows = n_steps + 1;
        const Scenario sc = make_scenario(s.kind, s.param, ms);
        if (sc.forcing) {
            s.forcing.resize(s.forcing_rows * interior_x.size());
            for (std::size_t n = 0; n < s.forcing_rows; ++n) {
                const double t = static_cast<double>(n) * spec.dt;
                for (std::size_t i = 0; i < interior_x.size(); ++i)
                    s.forcing[n * interior_x.size() + i] =
                        sc.forcing(interior_x[i], t) / s.norm_constant;
            }
        }
        if (s.kind == ScenarioKind::PlaneWave) {
            std::vector<double> collar_x;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (i < g.interior_lo || i > g.interior_hi) collar_x.push_back(g.x[i]);
            s.source = std::make_shared<FieldSeries>(resample(full, collar_x, full.times));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace nlwave
