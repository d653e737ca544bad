#include "nlwave/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlwave::nonlocal {

UniformGrid make_grid(double b, double h, double layer_width) {
    if (b <= 0 || h <= 0 || layer_width <= 0)
        throw std::invalid_argument("make_grid: b, h, layer width must be positive");
    for (double len : {2.0 * b / h, layer_width / h}) {
        if (std::abs(len - std::round(len)) > 1e-9 * std::max(1.0, len))
            throw std::invalid_argument("make_grid: domain and layer must be integer multiples of h");
    }
    UniformGrid g;
    g.b = b;
    g.h = h;
    g.layer_width = layer_width;
    const long nl = std::lround(layer_width / h);
    const long ni = std::lround(2.0 * b / h);
    const long total = ni + 2 * nl + 1;
    g.x.resize(total);
    for (long i = 0; i < total; ++i) g.x[i] = -(b + layer_width) + i * h;
    g.interior_lo = static_cast<std::size_t>(nl + 1);
    g.interior_hi = static_cast<std::size_t>(nl + ni - 1);
    return g;
}

BoundarySource BoundarySource::from_series(std::shared_ptr<const FieldSeries> s) {
    BoundarySource src;
    src.kind = Kind::Series;
    src.series = std::move(s);
    return src;
}

BoundarySource BoundarySource::from_function(std::function<double(double, double)> f) {
    BoundarySource src;
    src.kind = Kind::Function;
    src.fn = std::move(f);
    return src;
}

SourceColumns map_layer_columns(const UniformGrid& g, const FieldSeries& s) {
    SourceColumns cols;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i >= g.interior_lo && i <= g.interior_hi) continue;
        const double x = g.x[i];
        bool found = false;
        for (std::size_t c = 0; c < s.positions.size(); ++c) {
            if (std::abs(s.positions[c] - x) <= 1e-9 * std::max(1.0, std::abs(x))) {
                cols.emplace_back(i, c);
                found = true;
                break;
            }
        }
        if (!found)
            throw std::invalid_argument("boundary source series does not cover layer point x=" + g17(x));
    }
    return cols;
}

void fill_layer(std::vector<double>& u, const UniformGrid& g, const BoundarySource& src,
                const SourceColumns& cols, long step, double t) {
    switch (src.kind) {
        case BoundarySource::Kind::Zero:
            for (std::size_t i = 0; i < g.size(); ++i)
                if (i < g.interior_lo || i > g.interior_hi) u[i] = 0.0;
            break;
        case BoundarySource::Kind::Function:
            for (std::size_t i = 0; i < g.size(); ++i)
                if (i < g.interior_lo || i > g.interior_hi) u[i] = src.fn(g.x[i], t);
            break;
        case BoundarySource::Kind::Series: {
            const auto n = static_cast<std::size_t>(step);
            if (n >= src.series->nt())
                throw std::out_of_range("boundary source series ended before step " +
                                        std::to_string(step));
            if (std::abs(src.series->times[n] - t) > 1e-9 * std::max(1.0, std::abs(t)))
                throw std::invalid_argument("boundary source series is not sampled at the solver dt");
            const double* row = src.series->u_row(n);
            for (const auto& [gi, sc] : cols) u[gi] = row[sc];
            break;
        }
    }
}

double advance_interior(const double* u_prev, const double* u_cur, double* u_next,
                        const OperatorStencil& st, std::size_t i_lo, std::size_t i_hi,
                        const double* f_row, double dt) {
    const int J = st.reach;
    const int width = 2 * J + 1;
    const double* w = st.weights.data();
    const double dt2 = dt * dt;
    double max_abs = 0.0;
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
        const double* base = u_cur + i - J;
        const double ui = u_cur[i];
        // difference form: annihilates constants exactly
        double lap = 0.0;
        for (int j = 0; j < width; ++j) lap += w[j] * (base[j] - ui);
        const double f = f_row ? f_row[i - i_lo] : 0.0;
        const double val = 2.0 * ui - u_prev[i] + dt2 * (lap + f);
        u_next[i] = val;
        max_abs = std::max(max_abs, std::abs(val));
    }
    return max_abs;
}

namespace {

std::vector<double> forcing_row(const UniformGrid& g, const std::function<double(double, double)>& f,
                                double t) {
    std::vector<double> row;
    if (!f) return row;
    row.resize(g.interior_count());
    for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
        row[i - g.interior_lo] = f(g.x[i], t);
    return row;
}

void ensure_finite(double max_abs, long step_index) {
    if (!std::isfinite(max_abs))
        throw std::runtime_error("nonlocal solver: non-finite state at step " +
                                 std::to_string(step_index));
}

}  // namespace

SimState bootstrap(const UniformGrid& g, const OperatorStencil& st,
                   const std::vector<double>& u0, const std::vector<double>& v0,
                   const std::function<double(double, double)>& f, const BoundarySource& src,
                   double dt) {
    if (u0.size() != g.size() || v0.size() != g.size())
        throw std::invalid_argument("bootstrap: fields do not match the grid");
    SimState s;
    s.dt = dt;
    s.n = 1;
    s.u_prev = u0;
    s.u_curr.assign(g.size(), 0.0);

    SourceColumns cols;
    if (src.kind == BoundarySource::Kind::Series) cols = map_layer_columns(g, *src.series);
    fill_layer(s.u_prev, g, src, cols, 0, 0.0);

    const auto f0 = forcing_row(g, f, 0.0);
    for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) {
        const double lap = apply_stencil(st, s.u_prev, i);
        const double fi = f0.empty() ? 0.0 : f0[i - g.interior_lo];
        s.u_curr[i] = s.u_prev[i] + dt * v0[i] + 0.5 * dt * dt * (lap + fi);
    }
    fill_layer(s.u_curr, g, src, cols, 1, dt);
    return s;
}

void step(SimState& st, const UniformGrid& g, const OperatorStencil& op,
          const std::function<double(double, double)>& f, const BoundarySource& src) {
    static thread_local std::vector<double> next;
    next.assign(g.size(), 0.0);
    SourceColumns cols;
    if (src.kind == BoundarySource::Kind::Series) cols = map_layer_columns(g, *src.series);

    const double t_now = static_cast<double>(st.n) * st.dt;
    const double t_next = static_cast<double>(st.n + 1) * st.dt;
    const auto f_row = forcing_row(g, f, t_now);
    const double max_abs =
        advance_interior(st.u_prev.data(), st.u_curr.data(), next.data(), op, g.interior_lo,
                         g.interior_hi, f_row.empty() ? nullptr : f_row.data(), st.dt);
    ensure_finite(max_abs, st.n + 1);
    fill_layer(next, g, src, cols, st.n + 1, t_next);
    st.u_prev.swap(st.u_curr);
    st.u_curr.swap(next);
    ++st.n;
}

FieldSeries run(const UniformGrid& g, const KernelModel& kernel, const InitialData& ic,
                const std::function<double(double, double)>& f, const BoundarySource& src,
                double T, double dt, const RunOptions& opts) {
    if (kernel.delta > g.layer_width + 1e-12)
        throw std::invalid_argument("run: grid layer is thinner than the kernel horizon");
    const OperatorStencil st = build_stencil(kernel, g.h);
    const double steps_real = T / dt;
    const long n_steps = std::lround(steps_real);
    if (n_steps < 1 || std::abs(steps_real - n_steps) > 1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument("run: T/dt must be a positive integer");

    if (opts.check_stability) {
        const DispersionCurve curve = dispersion_curve(kernel, g.h);
        double w_max = 0.0;
        for (const auto& s : curve.samples) w_max = std::max(w_max, s.omega);
        if (opts.warnings && curve.any_unstable)
            opts.warnings->push_back("kernel has negative omega^2 wavenumbers (unstable medium)");
        if (dt * w_max > 2.0 && opts.warnings)
            opts.warnings->push_back("dt*omega_max = " + g17(dt * w_max) +
                                     " exceeds the central-differencing stability bound 2");
    }

    std::vector<double> u0(g.size(), 0.0), v0(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (ic.u0) u0[i] = ic.u0(g.x[i]);
        if (ic.v0) v0[i] = ic.v0(g.x[i]);
    }

    FieldSeries out;
    out.positions.assign(g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_lo),
                         g.x.begin() + static_cast<std::ptrdiff_t>(g.interior_hi) + 1);
    out.uniform = true;
    out.h = g.h;
    out.dt = dt;
    out.half_width = g.b;

    // Which steps get recorded.
    std::vector<long> record_steps;
    if (!opts.record_times.empty()) {
        for (double t : opts.record_times) {
            const long n = std::lround(t / dt);
            if (n < 0 || n > n_steps)
                throw std::invalid_argument("run: requested snapshot at t=" + g17(t) +
                                            " lies outside [0, T]");
            record_steps.push_back(n);
        }
        std::sort(record_steps.begin(), record_steps.end());
        record_steps.erase(std::unique(record_steps.begin(), record_steps.end()),
                           record_steps.end());
    } else {
        const long stride = std::max<long>(1, static_cast<long>(opts.record_stride));
        for (long n = 0; n <= n_steps; n += stride) record_steps.push_back(n);
    }

    // Three-step window so the centered velocity of a recorded step is exact.
    std::vector<double> pending_u;
    long pending_step = -1;
    std::size_t next_record = 0;

    auto emit_pending = [&](const std::vector<double>& u_after, bool final_onesided,
                            const std::vector<double>& u_before) {
        if (pending_step < 0) return;
        out.times.push_back(pending_step * dt);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) out.u.push_back(pending_u[i]);
        if (final_onesided) {
            for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
                out.v.push_back((pending_u[i] - u_before[i]) / dt);
        } else {
            for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
                out.v.push_back((u_after[i] - u_before[i]) / (2.0 * dt));
        }
        pending_step = -1;
    };

    SimState sim = bootstrap(g, st, u0, v0, f, src, dt);

    // Record step 0 with a one-sided velocity from the bootstrap step.
    if (next_record < record_steps.size() && record_steps[next_record] == 0) {
        out.times.push_back(0.0);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) out.u.push_back(sim.u_prev[i]);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
            out.v.push_back((sim.u_curr[i] - sim.u_prev[i]) / dt);
        ++next_record;
    }

    std::vector<double> u_before_pending;
    while (sim.n < n_steps) {
        // sim.u_curr is step sim.n; decide whether it must be recorded before advancing.
        if (next_record < record_steps.size() && record_steps[next_record] == sim.n) {
            pending_u = sim.u_curr;
            pending_step = sim.n;
            u_before_pending = sim.u_prev;
            ++next_record;
        }
        step(sim, g, st, f, src);
        emit_pending(sim.u_curr, false, u_before_pending);
    }
    if (next_record < record_steps.size() && record_steps[next_record] == sim.n) {
        out.times.push_back(sim.n * dt);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i) out.u.push_back(sim.u_curr[i]);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
            out.v.push_back((sim.u_curr[i] - sim.u_prev[i]) / dt);
    }
    return out;
}

FieldSeries velocity_series(const FieldSeries& s) {
    if (s.nt() < 3) throw std::invalid_argument("velocity_series: need at least three snapshots");
    FieldSeries out = s;
    const std::size_t nx = s.nx();
    for (std::size_t n = 0; n < s.nt(); ++n) {
        const std::size_t lo = (n == 0) ? 0 : n - 1;
        const std::size_t hi = (n + 1 == s.nt()) ? n : n + 1;
        const double dt_span = s.times[hi] - s.times[lo];
        for (std::size_t i = 0; i < nx; ++i)
            out.v[n * nx + i] = (s.u_at(hi, i) - s.u_at(lo, i)) / dt_span;
    }
    return out;
}

}  // namespace nlwave::nonlocal
