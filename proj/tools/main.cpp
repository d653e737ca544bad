#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "nlwave/config.hpp"
#include "nlwave/dns.hpp"
#include "nlwave/field_series.hpp"
#include "nlwave/kernel.hpp"
#include "nlwave/nonlocal.hpp"
#include "nlwave/scenarios.hpp"
#include "nlwave/training.hpp"

namespace fs = std::filesystem;
using namespace nlwave;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";

    RunConfig load() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& kv : overrides) apply_override(cfg, kv);
        return cfg;
    }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "key=value configuration file");
    cmd->add_option("--set", c.overrides, "override a configuration key (key=value)")
        ->take_all();
    cmd->add_option("--out", c.out_dir, "output directory");
}

Scenario parse_scenario(const std::string& text, const Microstructure& ms) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    double param = 0.0;
    if (colon != std::string::npos) param = std::strtod(text.c_str() + colon + 1, nullptr);
    return make_scenario(scenario_kind_from_string(kind), param, ms);
}

std::string scenario_tag(const Scenario& sc) {
    std::string tag = to_string(sc.kind);
    if (sc.kind != ScenarioKind::Impact) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "_%g", sc.param);
        tag += buf;
    }
    return tag;
}

void report_warnings(const Scenario& sc) {
    for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<double> parse_times(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

/// Collar positions of the validation grid (layer points on both sides).
std::vector<double> collar_positions(const nonlocal::UniformGrid& g) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (i < g.interior_lo || i > g.interior_hi) xs.push_back(g.x[i]);
    return xs;
}

std::vector<double> interior_positions(const nonlocal::UniformGrid& g) {
    return {g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_lo),
            g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_hi) + 1};
}

void write_paired_csv(const std::string& path, const FieldSeries& model, const FieldSeries& ref,
                      const std::string& config_id, const std::string& kernel_path) {
    if (model.nt() != ref.nt() || model.nx() != ref.nx())
        throw std::runtime_error("paired output: model and reference shapes differ");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "# b=" << g17(model.half_width) << "\n";
    f << "# dt=" << g17(model.dt) << "\n";
    f << "# grid=uniform\n";
    f << "# h=" << g17(model.h) << "\n";
    f << "# kernel=" << kernel_path << "\n";
    f << "t,x,u_model,v_model,u_dns,v_dns\n";
    for (std::size_t n = 0; n < model.nt(); ++n) {
        const std::string ts = g17(model.times[n]);
        for (std::size_t i = 0; i < model.nx(); ++i) {
            f << ts << ',' << g17(model.positions[i]) << ',' << g17(model.u_at(n, i)) << ','
              << g17(model.v_at(n, i)) << ',' << g17(ref.u_at(n, i)) << ','
              << g17(ref.v_at(n, i)) << '\n';
        }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

int cmd_dns(const Common& common, const std::string& scenario_arg, double T_override,
            const std::string& snap_csv, double record_dt) {
    const RunConfig cfg = common.load();
    const Microstructure ms = cfg.microstructure();
    const Scenario sc = parse_scenario(scenario_arg, ms);
    report_warnings(sc);

    const double T = T_override > 0 ? T_override : sc.duration;
    const dns::DnsGrid grid = dns::build_grid(ms, sc.b, cfg.dns_dt);

    dns::BoundaryDrive drive;
    if (sc.left_velocity) {
        drive.left = dns::EndKind::Prescribed;
        drive.left_velocity = sc.left_velocity;
    }
    dns::InitialCondition ic;
    ic.v0 = sc.initial_velocity;

    std::unique_ptr<dns::SeriesRecorder> rec;
    if (!snap_csv.empty()) {
        rec = std::make_unique<dns::SeriesRecorder>(grid.nodes, parse_times(snap_csv));
    } else {
        double rdt = record_dt > 0 ? record_dt : std::max(cfg.dns_dt, T / 100.0);
        auto stride = static_cast<std::size_t>(std::llround(rdt / cfg.dns_dt));
        rec = std::make_unique<dns::SeriesRecorder>(grid.nodes, std::max<std::size_t>(1, stride));
    }
    std::vector<dns::Recorder*> recs{rec.get()};
    dns::run(grid, drive, sc.forcing, ic, T, recs);

    FieldSeries series = rec->take();
    series.uniform = false;
    fs::create_directories(common.out_dir);
    const std::string path = common.out_dir + "/dns_" + scenario_tag(sc) + ".csv";
    write_field_csv(path, series, config_hash(cfg));
    std::cout << path << "\n";
    return 0;
}

int cmd_generate(const Common& common) {
    const RunConfig cfg = common.load();
    const Microstructure ms = cfg.microstructure();
    const auto scenarios = training_scenarios(ms, cfg.source_indices, cfg.plane_omegas);
    for (const auto& sc : scenarios) report_warnings(sc);
    const auto samples = build_training_set(scenarios, ms, cfg.grid_spec());
    const std::string dir = common.out_dir + "/training";
    write_training_set(dir, samples, ms, cfg.grid_spec(), config_hash(cfg));
    std::cout << dir + "/manifest.csv" << "\n";
    return 0;
}

int cmd_train(const Common& common, std::string manifest) {
    RunConfig cfg = common.load();
    const Microstructure ms = cfg.microstructure();
    if (manifest.empty()) manifest = common.out_dir + "/training/manifest.csv";

    const auto samples = read_training_set(manifest, ms, cfg.grid_spec());
    if (samples.empty()) throw std::runtime_error("no samples in " + manifest);

    cfg.resolve_effective_params();
    std::cerr << "effective parameters: c0=" << g17(cfg.c0)
              << " curvature=" << g17(cfg.curvature) << "\n";

    train::TrainConfig tc = cfg.train_config();
    tc.progress_every = 25;
    const train::TrainResult result = train::minimize(samples, tc);
    std::cerr << "training finished: " << result.report.termination << " after "
              << result.report.trace.size() << " iterations\n";

    fs::create_directories(common.out_dir);
    const std::string kernel_path = common.out_dir + "/kernel.txt";
    save_kernel(kernel_path, result.kernel, config_hash(cfg));

    // Round-trip check: the stored kernel must satisfy the constraints.
    const KernelModel reloaded = load_kernel(kernel_path);
    const auto cs = train::make_constraints(cfg.M, cfg.delta, cfg.h, cfg.rho, cfg.c0, cfg.curvature);
    const double resid = train::constraint_residual(cs, reloaded.coefficients);
    if (resid > 1e-10)
        throw std::runtime_error("stored kernel violates the moment constraints: " + g17(resid));

    write_loss_report_csv(common.out_dir + "/loss_report.csv", result.report, config_hash(cfg));
    std::cout << kernel_path << "\n";
    return 0;
}

int cmd_dispersion(const Common& common, const std::string& kernel_path) {
    const RunConfig cfg = common.load();
    const KernelModel k = load_kernel(kernel_path);
    const DispersionCurve curve = dispersion_curve(k, cfg.h);
    fs::create_directories(common.out_dir);
    const std::string path = common.out_dir + "/dispersion.csv";
    write_dispersion_csv(path, curve, config_hash(cfg));
    if (curve.any_unstable)
        std::cerr << "warning: omega^2 < 0 at some wavenumbers (unstable kernel)\n";
    std::cout << path << "\n";
    return 0;
}

int cmd_validate(const Common& common, const std::string& kernel_path,
                 const std::string& scenario_arg, double T_override, const std::string& snap_csv) {
    const RunConfig cfg = common.load();
    const Microstructure ms = cfg.microstructure();
    const Scenario sc = parse_scenario(scenario_arg, ms);
    report_warnings(sc);
    if (sc.kind != ScenarioKind::WavePacket && sc.kind != ScenarioKind::Impact)
        throw std::invalid_argument("validate expects a wave_packet or impact scenario");

    const KernelModel kernel = load_kernel(kernel_path);
    const double T = T_override > 0 ? T_override : sc.duration;

    std::vector<double> snaps;
    if (!snap_csv.empty()) {
        snaps = parse_times(snap_csv);
    } else if (sc.kind == ScenarioKind::Impact) {
        snaps = {20.0, std::min(600.0, T)};
    } else {
        snaps = {std::abs(sc.param - 3.9) < 1e-9 ? std::min(320.0, T) : std::min(100.0, T)};
    }

    const nonlocal::UniformGrid grid = nonlocal::make_grid(sc.b - kernel.delta, cfg.h, kernel.delta);
    const std::vector<double> collar_x = collar_positions(grid);
    const std::vector<double> interior_x = interior_positions(grid);

    // Reference run: collar trace for the boundary condition plus snapshots.
    const dns::DnsGrid dgrid = dns::build_grid(ms, sc.b, cfg.dns_dt);
    dns::BoundaryDrive drive;
    if (sc.left_velocity) {
        drive.left = dns::EndKind::Prescribed;
        drive.left_velocity = sc.left_velocity;
    }
    dns::InitialCondition ic;
    ic.v0 = sc.initial_velocity;

    const auto stride = static_cast<std::size_t>(std::llround(cfg.dt / cfg.dns_dt));
    dns::SeriesRecorder collar_rec(collar_x, stride);
    dns::SeriesRecorder snap_rec(interior_x, snaps);
    std::vector<dns::Recorder*> recs{&collar_rec, &snap_rec};
    dns::run(dgrid, drive, sc.forcing, ic, T, recs);

    auto collar = std::make_shared<FieldSeries>(collar_rec.take());
    FieldSeries dns_snaps = snap_rec.take();

    nonlocal::InitialData idata;
    idata.v0 = sc.initial_velocity;
    nonlocal::RunOptions opts;
    opts.record_times = snaps;
    opts.check_stability = true;
    std::vector<std::string> warnings;
    opts.warnings = &warnings;

    FieldSeries model = nonlocal::run(grid, kernel, idata, sc.forcing,
                                      nonlocal::BoundarySource::from_series(collar), T, cfg.dt, opts);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    model.kernel_path = kernel_path;

    fs::create_directories(common.out_dir);
    const std::string path = common.out_dir + "/validate_" + scenario_tag(sc) + ".csv";
    write_paired_csv(path, model, dns_snaps, config_hash(cfg), kernel_path);
    std::cout << path << "\n";
    return 0;
}

int cmd_sweep(const Common& common, const std::string& deltas_csv, const std::string& epsilons_csv) {
    RunConfig cfg = common.load();
    const Microstructure ms = cfg.microstructure();
    cfg.resolve_effective_params();

    const std::vector<double> deltas = parse_times(deltas_csv);
    const std::vector<double> epsilons = parse_times(epsilons_csv);

    const auto measured = train::dns_group_velocity(ms, cfg.vg_omegas, cfg.packet_config());
    const auto scenarios = training_scenarios(ms, cfg.source_indices, cfg.plane_omegas);
    const auto rows = train::sweep(ms, scenarios, cfg.train_config(), deltas, epsilons, measured);

    fs::create_directories(common.out_dir);
    const std::string path = common.out_dir + "/sweep.csv";
    write_sweep_csv(path, rows, config_hash(cfg));

    const train::SweepRow* best = nullptr;
    for (const auto& r : rows)
        if (r.ok && (!best || r.mismatch < best->mismatch)) best = &r;
    if (best)
        std::cerr << "best pair: delta=" << g17(best->delta) << " epsilon=" << g17(best->epsilon)
                  << " (vg mismatch " << g17(best->mismatch) << ")\n";
    std::cout << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal wave-kernel toolkit for layered elastic bars"};
    app.require_subcommand(1);

    Common c_dns, c_gen, c_train, c_disp, c_val, c_sweep;
    std::string scenario_arg, kernel_path, manifest, snap_csv, deltas_csv, epsilons_csv;
    double T_override = 0.0, record_dt = 0.0;

    auto* dns_cmd = app.add_subcommand("dns", "run the reference solver for one scenario");
    add_common(dns_cmd, c_dns);
    dns_cmd->add_option("--scenario", scenario_arg, "kind[:param]")->required();
    dns_cmd->add_option("--T", T_override, "run length override");
    dns_cmd->add_option("--snap", snap_csv, "comma-separated snapshot times");
    dns_cmd->add_option("--record-dt", record_dt, "record every record-dt instead of snapshots");

    auto* gen_cmd = app.add_subcommand("generate", "build the training set");
    add_common(gen_cmd, c_gen);

    auto* train_cmd = app.add_subcommand("train", "learn a kernel from a training manifest");
    add_common(train_cmd, c_train);
    train_cmd->add_option("--manifest", manifest, "manifest.csv path (default <out>/training/manifest.csv)");

    auto* disp_cmd = app.add_subcommand("dispersion", "dispersion curve and band stop of a kernel");
    add_common(disp_cmd, c_disp);
    disp_cmd->add_option("--kernel", kernel_path, "kernel file")->required();

    auto* val_cmd = app.add_subcommand("validate", "compare the nonlocal model against the reference");
    add_common(val_cmd, c_val);
    val_cmd->add_option("--kernel", kernel_path, "kernel file")->required();
    val_cmd->add_option("--scenario", scenario_arg, "wave_packet:omega or impact")->required();
    val_cmd->add_option("--T", T_override, "run length override");
    val_cmd->add_option("--snap", snap_csv, "comma-separated snapshot times");

    auto* sweep_cmd = app.add_subcommand("sweep", "train over a (delta, epsilon) grid");
    add_common(sweep_cmd, c_sweep);
    sweep_cmd->add_option("--deltas", deltas_csv, "comma-separated horizons")->required();
    sweep_cmd->add_option("--epsilons", epsilons_csv, "comma-separated regularization weights")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (dns_cmd->parsed()) return cmd_dns(c_dns, scenario_arg, T_override, snap_csv, record_dt);
        if (gen_cmd->parsed()) return cmd_generate(c_gen);
        if (train_cmd->parsed()) return cmd_train(c_train, manifest);
        if (disp_cmd->parsed()) return cmd_dispersion(c_disp, kernel_path);
        if (val_cmd->parsed()) return cmd_validate(c_val, kernel_path, scenario_arg, T_override, snap_csv);
        if (sweep_cmd->parsed()) return cmd_sweep(c_sweep, deltas_csv, epsilons_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
