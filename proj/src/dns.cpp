#include "nlwave/dns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlwave::dns {

namespace {

long checked_round(double x, double tol, const char* what) {
    const long n = std::lround(x);
    if (n <= 0 || std::abs(x - static_cast<double>(n)) > tol * std::max(1.0, std::abs(x)))
        throw std::invalid_argument(std::string(what) + ": " + g17(x) + " is not a positive integer");
    return n;
}

/// Nearest dt to `want` for which both layers hold an integral number of
/// segments, or 0 when no candidate exists nearby.
double nearest_admissible_dt(const Microstructure& ms, double want) {
    const double ca = wave_speed(ms.material_a);
    const double cb = wave_speed(ms.material_b);
    const double L = ms.layer_length;
    double best = 0.0;
    for (long na = 1; na <= 2'000'000; ++na) {
        const double dt = L / (ca * static_cast<double>(na));
        const double nb = L / (cb * dt);
        if (std::abs(nb - std::round(nb)) > 1e-9 * std::max(1.0, nb)) continue;
        if (best == 0.0 || std::abs(dt - want) < std::abs(best - want)) best = dt;
        if (dt < want && best != 0.0 && std::abs(best - want) <= std::abs(dt - want)) break;
    }
    return best;
}

}  // namespace

double snap_half_width(const Microstructure& ms, double b) {
    const double period = 2.0 * ms.layer_length;
    const double n = std::nearbyint(b / period);  // ties to even
    return std::max(1.0, n) * period;
}

DnsGrid build_grid(const Microstructure& ms, double b, double dt) {
    if (b <= 0 || dt <= 0) throw std::invalid_argument("build_grid: b and dt must be positive");
    const double L = ms.layer_length;

    for (const double end : {b - ms.phase_offset, b + ms.phase_offset}) {
        const double layers_real = end / L;
        if (std::abs(layers_real - std::round(layers_real)) > 1e-9 * std::max(1.0, layers_real))
            throw std::invalid_argument("build_grid: domain ends do not fall on layer interfaces; "
                                        "nearest commensurate half-width is " +
                                        g17(snap_half_width(ms, b)));
    }

    // Per-layer segment counts; every interface must be a node.
    const Material* mats[2] = {&ms.material_a, &ms.material_b};
    long seg_count[2];
    for (int s = 0; s < 2; ++s) {
        const double c = wave_speed(*mats[s]);
        const double n_real = L / (c * dt);
        const long n = std::lround(n_real);
        if (n <= 0 || std::abs(n_real - static_cast<double>(n)) > 1e-9 * std::max(1.0, n_real)) {
            const double fix = nearest_admissible_dt(ms, dt);
            std::string msg = "build_grid: L/(c*dt) = " + g17(n_real) +
                              " is not an integer for layer material with c=" + g17(c);
            if (fix > 0) msg += "; nearest admissible dt = " + g17(fix);
            throw std::invalid_argument(msg);
        }
        seg_count[s] = n;
    }

    DnsGrid g;
    g.dt = dt;
    g.half_width = b;
    const long n_layers = std::lround(2.0 * b / L);
    g.nodes.reserve(static_cast<std::size_t>(n_layers * std::max(seg_count[0], seg_count[1])) + 1);
    g.nodes.push_back(-b);
    for (long layer = 0; layer < n_layers; ++layer) {
        const double x0 = -b + static_cast<double>(layer) * L;
        const Material& m = material_at(ms, x0 + 0.5 * L);
        const long n = (&m == &ms.material_a) ? seg_count[0] : seg_count[1];
        const double seg_len = L / static_cast<double>(n);
        const double z = impedance(m);
        const double c = wave_speed(m);
        for (long i = 1; i <= n; ++i) {
            g.nodes.push_back(x0 + static_cast<double>(i) * seg_len);
            g.segment_impedance.push_back(z);
            g.segment_speed.push_back(c);
            g.segment_modulus.push_back(m.youngs_modulus);
            g.segment_density.push_back(m.density);
        }
        g.nodes.back() = x0 + L;  // keep interfaces exact
    }
    g.inv_impedance_sum.assign(g.node_count(), 0.0);
    for (std::size_t i = 1; i + 1 < g.node_count(); ++i)
        g.inv_impedance_sum[i] = 1.0 / (g.segment_impedance[i - 1] + g.segment_impedance[i]);
    return g;
}

DnsState make_state(const DnsGrid& grid) {
    DnsState st;
    const std::size_t n = grid.node_count();
    st.v.assign(n, 0.0);
    st.sigma.assign(n, 0.0);
    st.u.assign(n, 0.0);
    st.v_next.assign(n, 0.0);
    st.sigma_next.assign(n, 0.0);
    return st;
}

void step(DnsState& st, const DnsGrid& grid, const Forcing& f, const BoundaryDrive& drive) {
    const std::size_t n = grid.node_count();
    if (st.v.size() != n) throw std::invalid_argument("dns::step: state does not match grid");
    const double dt = grid.dt;
    const double t_now = static_cast<double>(st.step_index) * dt;
    const double t_next = t_now + dt;

    const double* z = grid.segment_impedance.data();
    const double* inv_zs = grid.inv_impedance_sum.data();
    const double* v = st.v.data();
    const double* sg = st.sigma.data();
    double* vn = st.v_next.data();
    double* sn = st.sigma_next.data();

    double max_abs = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double zl = z[i - 1], zr = z[i];
        const double vi = (sg[i + 1] - sg[i - 1] + zr * v[i + 1] + zl * v[i - 1]) * inv_zs[i];
        sn[i] = sg[i - 1] + zl * (vi - v[i - 1]);
        vn[i] = vi;
        max_abs = std::max(max_abs, std::abs(vi));
    }

    {  // left end: only the left-running invariant sigma + Z v arrives
        const double zr = z[0];
        const double s_in = sg[1] + zr * v[1];
        switch (drive.left) {
            case EndKind::Prescribed:
                vn[0] = drive.left_velocity(t_next);
                sn[0] = s_in - zr * vn[0];
                break;
            case EndKind::Free:
                sn[0] = 0.0;
                vn[0] = s_in / zr;
                break;
            case EndKind::Fixed:
                vn[0] = 0.0;
                sn[0] = s_in;
                break;
        }
    }
    {  // right end: only the right-running invariant sigma - Z v arrives
        const double zl = z[n - 2];
        const double r_in = sg[n - 2] - zl * v[n - 2];
        switch (drive.right) {
            case EndKind::Free:
                sn[n - 1] = 0.0;
                vn[n - 1] = -r_in / zl;
                break;
            case EndKind::Fixed:
                vn[n - 1] = 0.0;
                sn[n - 1] = r_in;
                break;
            case EndKind::Prescribed:
                throw std::invalid_argument("dns::step: prescribed velocity is supported on the left end only");
        }
    }

    if (f) {
        const std::size_t lo = (drive.left == EndKind::Free) ? 0 : 1;
        const std::size_t hi = (drive.right == EndKind::Free) ? n : n - 1;
        for (std::size_t i = lo; i < hi; ++i) vn[i] += f(grid.nodes[i], t_now) * dt;
    }
    for (std::size_t i = 0; i < n; ++i) st.u[i] += dt * vn[i];

    if (!std::isfinite(max_abs) || !std::isfinite(vn[0]) || !std::isfinite(vn[n - 1]))
        throw std::runtime_error("dns::step: non-finite state at step " +
                                 std::to_string(st.step_index + 1));

    st.v.swap(st.v_next);
    st.sigma.swap(st.sigma_next);
    ++st.step_index;
}

double total_energy(const DnsGrid& grid, const DnsState& st) {
    double e = 0.0;
    for (std::size_t s = 0; s + 1 < grid.node_count(); ++s) {
        const double len = grid.nodes[s + 1] - grid.nodes[s];
        const double rho = grid.segment_density[s];
        const double mod = grid.segment_modulus[s];
        const double kin = 0.25 * rho * (st.v[s] * st.v[s] + st.v[s + 1] * st.v[s + 1]);
        const double pot = 0.25 * (st.sigma[s] * st.sigma[s] + st.sigma[s + 1] * st.sigma[s + 1]) / mod;
        e += len * (kin + pot);
    }
    return e;
}

SeriesRecorder::SeriesRecorder(std::vector<double> positions, std::size_t stride)
    : positions_(std::move(positions)), stride_(stride == 0 ? 1 : stride) {}

SeriesRecorder::SeriesRecorder(std::vector<double> positions, std::vector<double> times)
    : positions_(std::move(positions)), times_(std::move(times)) {
    std::sort(times_.begin(), times_.end());
}

void SeriesRecorder::on_state(const DnsGrid& grid, const DnsState& st, double t) {
    if (!coeffs_ready_) {
        coeffs_.reserve(positions_.size());
        for (double x : positions_) coeffs_.push_back(interp_coeff(grid.nodes, x));
        out_.positions = positions_;
        out_.dt = grid.dt;
        out_.half_width = grid.half_width;
        out_.uniform = positions_.size() >= 2;
        if (out_.uniform) out_.h = positions_[1] - positions_[0];
        coeffs_ready_ = true;
    }
    bool want = false;
    if (!times_.empty()) {
        if (next_time_ < times_.size() && t >= times_[next_time_] - 0.5 * grid.dt) {
            want = true;
            ++next_time_;
        }
    } else {
        want = (step_count_ % stride_ == 0);
    }
    ++step_count_;
    if (!want) return;

    out_.times.push_back(t);
    for (const auto& c : coeffs_) {
        out_.u.push_back((1.0 - c.w) * st.u[c.i] + c.w * st.u[c.i + 1]);
        out_.v.push_back((1.0 - c.w) * st.v[c.i] + c.w * st.v[c.i + 1]);
    }
}

FieldSeries SeriesRecorder::take() { return std::move(out_); }

CentroidRecorder::CentroidRecorder(std::size_t stride, double window_lo, double window_hi)
    : stride_(stride == 0 ? 1 : stride), lo_(window_lo), hi_(window_hi) {}

void CentroidRecorder::on_state(const DnsGrid& grid, const DnsState& st, double t) {
    const bool want = (step_count_++ % stride_ == 0);
    if (!want) return;
    double mass = 0.0, moment = 0.0;
    for (std::size_t s = 0; s + 1 < grid.node_count(); ++s) {
        const double xl = grid.nodes[s], xr = grid.nodes[s + 1];
        if (xr < lo_ || xl > hi_) continue;
        const double len = xr - xl;
        const double cell = 0.5 * len * (st.v[s] * st.v[s] + st.v[s + 1] * st.v[s + 1]);
        mass += cell;
        moment += cell * 0.5 * (xl + xr);
    }
    samples_.push_back({t, mass > 0 ? moment / mass : 0.0, mass});
}

void run(const DnsGrid& grid, const BoundaryDrive& drive, const Forcing& f,
         const InitialCondition& ic, double T, const std::vector<Recorder*>& recorders) {
    const long n_steps = checked_round(T / grid.dt, 1e-9, "dns::run: T/dt");
    DnsState st = make_state(grid);
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        const double x = grid.nodes[i];
        if (ic.v0) st.v[i] = ic.v0(x);
        if (ic.u0) st.u[i] = ic.u0(x);
        if (ic.sigma0) st.sigma[i] = ic.sigma0(x);
    }
    for (auto* r : recorders) r->on_state(grid, st, 0.0);
    for (long n = 0; n < n_steps; ++n) {
        step(st, grid, f, drive);
        const double t = static_cast<double>(st.step_index) * grid.dt;
        for (auto* r : recorders) r->on_state(grid, st, t);
    }
}

PacketSpeed measure_packet_speed(const Microstructure& ms, double omega,
                                 const PacketMeasureConfig& cfg) {
    PacketSpeed out;
    if (omega <= 0) {
        out.diagnostic = "omega must be positive";
        return out;
    }
    const double period = 2.0 * std::numbers::pi / omega;
    const double t_w = std::max(cfg.min_envelope_width, cfg.envelope_periods * period);
    const double t_c = 3.0 * t_w;
    const double t1 = 6.0 * t_w;           // packet fully inside
    const double t2 = t1 + cfg.travel_time;
    const double c_ref = effective_speed(ms);

    double b = 0.5 * (c_ref * (6.0 * t_w + cfg.travel_time) + 8.0);
    b = snap_half_width(ms, b);
    out.domain_half_width = b;

    DnsGrid grid;
    try {
        grid = build_grid(ms, b, cfg.dns_dt);
    } catch (const std::exception& e) {
        out.diagnostic = e.what();
        return out;
    }

    BoundaryDrive drive;
    drive.left = EndKind::Prescribed;
    drive.left_velocity = [omega, t_c, t_w](double t) {
        const double s = (t - t_c) / t_w;
        return std::sin(omega * t) * std::exp(-s * s);
    };

    CentroidRecorder centroid(std::lround(1.0 / cfg.dns_dt), -b + cfg.window_margin, b);
    std::vector<Recorder*> recs{&centroid};
    const double T = std::ceil(t2);
    run(grid, drive, {}, {}, T, recs);

    const auto& samples = centroid.samples();
    auto at_time = [&](double t) -> const CentroidRecorder::Sample* {
        const CentroidRecorder::Sample* best = nullptr;
        for (const auto& s : samples)
            if (!best || std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
        return best;
    };
    const auto* s1 = at_time(t1);
    const auto* s2 = at_time(t2);
    if (!s1 || !s2 || s2->t <= s1->t) {
        out.diagnostic = "no centroid samples at the measurement times";
        return out;
    }
    if (s1->mass <= 1e-14 || s2->mass <= 1e-14) {
        out.diagnostic = "packet energy vanished inside the tracking window";
        return out;
    }
    const double margin = 2.0;
    if (s2->centroid > b - margin) {
        out.diagnostic = "packet centroid reached the far end of the domain";
        return out;
    }
    out.vg = (s2->centroid - s1->centroid) / (s2->t - s1->t);
    out.ok = true;
    return out;
}

}  // namespace nlwave::dns
