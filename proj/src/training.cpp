#include "nlwave/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "nlwave/dns.hpp"
#include "nlwave/nonlocal.hpp"
#include "nlwave/parallel.hpp"

namespace nlwave::train {

ConstraintSystem make_constraints(int degree, double delta, double h, double rho, double c0,
                                  double curvature) {
    if (degree < 2) throw std::invalid_argument("make_constraints: degree must be at least 2");
    ConstraintSystem cs;
    cs.degree = degree;
    cs.delta = delta;
    cs.h = h;
    cs.rho = rho;
    cs.c0 = c0;
    cs.curvature = curvature;
    cs.p2 = discrete_moments(degree, delta, h, 2);
    cs.p4 = discrete_moments(degree, delta, h, 4);
    cs.target_p2 = rho * c0 * c0;
    cs.target_p4 = -4.0 * rho * c0 * c0 * c0 * curvature;

    const int M = degree;
    const double a = cs.p2[M - 1], b = cs.p2[M];
    const double c = cs.p4[M - 1], d = cs.p4[M];
    const double det = a * d - b * c;
    const double scale = std::max(std::abs(a * d), std::abs(b * c));
    if (!(std::abs(det) > 1e-14 * std::max(scale, 1e-300)))
        throw std::runtime_error("make_constraints: elimination block is singular (det=" +
                                 g17(det) + ")");
    const double inv_det = 1.0 / det;

    auto solve_tail = [&](double r1, double r2, double& x1, double& x2) {
        x1 = (r1 * d - b * r2) * inv_det;
        x2 = (a * r2 - r1 * c) * inv_det;
    };
    solve_tail(cs.target_p2, cs.target_p4, cs.tail_bias[0], cs.tail_bias[1]);

    cs.tail_jac.assign(2 * cs.free_count(), 0.0);
    for (std::size_t j = 0; j < cs.free_count(); ++j) {
        double x1, x2;
        solve_tail(-cs.p2[j], -cs.p4[j], x1, x2);
        cs.tail_jac[j] = x1;
        cs.tail_jac[cs.free_count() + j] = x2;
    }
    return cs;
}

std::vector<double> eliminate(const ConstraintSystem& cs, std::span<const double> theta) {
    if (theta.size() != cs.free_count())
        throw std::invalid_argument("eliminate: expected " + std::to_string(cs.free_count()) +
                                    " free coefficients");
    std::vector<double> out(cs.degree + 1);
    double t1 = cs.tail_bias[0], t2 = cs.tail_bias[1];
    for (std::size_t j = 0; j < theta.size(); ++j) {
        out[j] = theta[j];
        t1 += cs.tail_jac[j] * theta[j];
        t2 += cs.tail_jac[cs.free_count() + j] * theta[j];
    }
    out[cs.degree - 1] = t1;
    out[cs.degree] = t2;
    return out;
}

std::vector<double> chain_to_free(const ConstraintSystem& cs, std::span<const double> dL_dC) {
    if (dL_dC.size() != static_cast<std::size_t>(cs.degree) + 1)
        throw std::invalid_argument("chain_to_free: size mismatch");
    std::vector<double> g(cs.free_count());
    for (std::size_t j = 0; j < g.size(); ++j)
        g[j] = dL_dC[j] + cs.tail_jac[j] * dL_dC[cs.degree - 1] +
               cs.tail_jac[cs.free_count() + j] * dL_dC[cs.degree];
    return g;
}

double constraint_residual(const ConstraintSystem& cs, std::span<const double> coeffs) {
    if (coeffs.size() != static_cast<std::size_t>(cs.degree) + 1)
        throw std::invalid_argument("constraint_residual: size mismatch");
    double s2 = 0.0, s4 = 0.0, a2 = 0.0, a4 = 0.0;
    for (int m = 0; m <= cs.degree; ++m) {
        s2 += coeffs[m] * cs.p2[m];
        s4 += coeffs[m] * cs.p4[m];
        a2 += std::abs(coeffs[m] * cs.p2[m]);
        a4 += std::abs(coeffs[m] * cs.p4[m]);
    }
    const double r2 = std::abs(s2 - cs.target_p2) / std::max({1.0, a2, std::abs(cs.target_p2)});
    const double r4 = std::abs(s4 - cs.target_p4) / std::max({1.0, a4, std::abs(cs.target_p4)});
    return std::max(r2, r4);
}

KernelModel completed_kernel(const ConstraintSystem& cs, std::span<const double> theta) {
    KernelModel k;
    k.delta = cs.delta;
    k.degree = cs.degree;
    k.rho = cs.rho;
    k.coefficients = eliminate(cs, theta);
    return k;
}

namespace {

constexpr double kLossSentinel = 1e300;

/// Stencils of the basis kernels that a unit move of each free coefficient
/// adds to K (identity part plus the tail response); constant across
/// iterations, built once.
std::vector<OperatorStencil> direction_stencils(const ConstraintSystem& cs) {
    std::vector<OperatorStencil> out;
    out.reserve(cs.free_count());
    for (std::size_t j = 0; j < cs.free_count(); ++j) {
        KernelModel dir;
        dir.delta = cs.delta;
        dir.degree = cs.degree;
        dir.rho = cs.rho;
        dir.coefficients.assign(cs.degree + 1, 0.0);
        dir.coefficients[j] = 1.0;
        dir.coefficients[cs.degree - 1] = cs.tail_jac[j];
        dir.coefficients[cs.degree] = cs.tail_jac[cs.free_count() + j];
        out.push_back(build_stencil(dir, cs.h));
    }
    return out;
}

struct SampleGeometry {
    nonlocal::UniformGrid grid;
    std::vector<std::size_t> collar_index;  // grid index per source column
    std::size_t n_steps = 0;                // T_tr/dt
};

SampleGeometry sample_geometry(const TrainingSample& s, const TrainConfig& cfg) {
    SampleGeometry geo;
    geo.grid = nonlocal::make_grid(s.b_interior, cfg.grid.h, cfg.grid.delta);
    for (std::size_t i = 0; i < geo.grid.size(); ++i)
        if (i < geo.grid.interior_lo || i > geo.grid.interior_hi) geo.collar_index.push_back(i);
    geo.n_steps = static_cast<std::size_t>(std::llround(s.T_tr / cfg.grid.dt));
    if (s.reference.nt() != geo.n_steps + 1)
        throw std::invalid_argument("sample " + s.id + ": reference must hold T_tr/dt + 1 rows");
    if (s.reference.nx() != geo.grid.interior_count())
        throw std::invalid_argument("sample " + s.id + ": reference grid mismatch");
    return geo;
}

void fill_collar(double* u, const SampleGeometry& geo, const TrainingSample& s,
                 std::size_t step) {
    if (!s.source) return;  // collar stays zero
    const double* row = s.source->u_row(step);
    for (std::size_t c = 0; c < geo.collar_index.size(); ++c) u[geo.collar_index[c]] = row[c];
}

struct SampleEval {
    double sq = 0.0;              // sum_n ||u^{n+1} - ref^{n+1}||^2
    std::vector<double> grad_sq;  // d sq / d theta_j
    bool ok = true;
};

/// Forward solve for one sample; when dirs is non-null, also runs the
/// sensitivity recursion per free direction against the stored trajectory.
SampleEval eval_sample(const TrainingSample& s, const TrainConfig& cfg,
                       const OperatorStencil& st, const std::vector<OperatorStencil>* dirs) {
    const SampleGeometry geo = sample_geometry(s, cfg);
    const auto& g = geo.grid;
    const std::size_t nx = g.size();
    const std::size_t n_int = g.interior_count();
    const std::size_t lo = g.interior_lo, hi = g.interior_hi;
    const double dt = cfg.grid.dt;
    const std::size_t n_steps = geo.n_steps;

    SampleEval out;

    // Forward trajectory u^0 .. u^{n_steps+1} on the full grid.
    std::vector<double> traj((n_steps + 2) * nx, 0.0);
    auto row = [&](std::size_t n) { return traj.data() + n * nx; };
    auto f_row = [&](std::size_t n) -> const double* {
        if (s.forcing.empty()) return nullptr;
        if (n >= s.forcing_rows)
            throw std::invalid_argument("sample " + s.id + ": forcing rows exhausted");
        return s.forcing.data() + n * n_int;
    };

    // u^0 = 0 interior (training data has zero ICs), collar from the source.
    fill_collar(row(0), geo, s, 0);
    {  // Taylor start with u0 = v0 = 0: u^1 = dt^2/2 (L u^0 + f(.,0)) inside
        double* u1 = row(1);
        for (std::size_t i = lo; i <= hi; ++i) {
            const double lap = apply_stencil(st, std::span<const double>(row(0), nx), i);
            const double f0 = f_row(0) ? f_row(0)[i - lo] : 0.0;
            u1[i] = row(0)[i] + 0.5 * dt * dt * (lap + f0);
        }
        fill_collar(u1, geo, s, 1);
    }

    for (std::size_t n = 1; n <= n_steps; ++n) {
        const double max_abs = nonlocal::advance_interior(row(n - 1), row(n), row(n + 1), st, lo,
                                                          hi, f_row(n), dt);
        if (!std::isfinite(max_abs) || max_abs > 1e140) {
            out.ok = false;
            return out;
        }
        fill_collar(row(n + 1), geo, s, n + 1);
        const double* ref = s.reference.u_row(n);  // reference time (n+1) dt
        const double* un1 = row(n + 1);
        double acc = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            const double d = un1[i] - ref[i - lo];
            acc += d * d;
        }
        out.sq += acc;
    }
    if (!std::isfinite(out.sq)) {
        out.ok = false;
        return out;
    }
    if (!dirs) return out;

    // Sensitivity recursions share the trajectory; the collar of every
    // sensitivity field is identically zero because the data do not depend
    // on the coefficients.
    out.grad_sq.assign(dirs->size(), 0.0);
    std::vector<double> sp(nx, 0.0), sc(nx, 0.0), sn(nx, 0.0);
    for (std::size_t j = 0; j < dirs->size(); ++j) {
        const OperatorStencil& dj = (*dirs)[j];
        std::fill(sp.begin(), sp.end(), 0.0);
        std::fill(sc.begin(), sc.end(), 0.0);
        // s^1 = dt^2/2 L_j[u^0] (zero for training data, kept for generality)
        for (std::size_t i = lo; i <= hi; ++i)
            sc[i] = 0.5 * dt * dt * apply_stencil(dj, std::span<const double>(row(0), nx), i);
        double acc_j = 0.0;
        for (std::size_t n = 1; n <= n_steps; ++n) {
            const double* un = row(n);
            const double* un1 = row(n + 1);
            const double* ref = s.reference.u_row(n);
            const int J = st.reach;
            const int width = 2 * J + 1;
            const double* w = st.weights.data();
            const double* wd = dj.weights.data();
            const double dt2 = dt * dt;
            double dot = 0.0;
            for (std::size_t i = lo; i <= hi; ++i) {
                const double* sb = sc.data() + i - J;
                const double* ub = un + i - J;
                const double si = sc[i], uni = un[i];
                double conv_s = 0.0, conv_u = 0.0;
                for (int q = 0; q < width; ++q) {
                    conv_s += w[q] * (sb[q] - si);
                    conv_u += wd[q] * (ub[q] - uni);
                }
                const double val = 2.0 * si - sp[i] + dt2 * (conv_s + conv_u);
                sn[i] = val;
                dot += val * (un1[i] - ref[i - lo]);
            }
            acc_j += dot;
            std::swap(sp, sc);
            std::swap(sc, sn);
        }
        out.grad_sq[j] = 2.0 * acc_j;
    }
    return out;
}

double regularization(const TrainConfig& cfg, std::span<const double> coeffs) {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return cfg.epsilon / static_cast<double>(cfg.degree + 1) * s;
}

}  // namespace

LossValue loss(std::span<const double> theta, const std::vector<TrainingSample>& samples,
               const TrainConfig& cfg, const ConstraintSystem& cs) {
    const std::vector<double> coeffs = eliminate(cs, theta);
    KernelModel k = completed_kernel(cs, theta);
    const OperatorStencil st = build_stencil(k, cfg.grid.h);

    std::vector<SampleEval> evals(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        evals[i] = eval_sample(samples[i], cfg, st, nullptr);
    });

    LossValue out;
    double sq = 0.0;
    for (const auto& e : evals) {
        if (!e.ok) {
            out.value = kLossSentinel;
            out.diagnostic = "solver blow-up";
            return out;
        }
        sq += e.sq;
    }
    const double prefactor =
        cfg.grid.T_tr / (cfg.grid.dt * cfg.grid.dt * cfg.grid.dt * static_cast<double>(samples.size()));
    out.value = (samples.empty() ? 0.0 : prefactor * sq) + regularization(cfg, coeffs);
    out.ok = std::isfinite(out.value);
    if (!out.ok) out.value = kLossSentinel;
    return out;
}

LossGrad loss_gradient(std::span<const double> theta, const std::vector<TrainingSample>& samples,
                       const TrainConfig& cfg, const ConstraintSystem& cs) {
    const std::vector<double> coeffs = eliminate(cs, theta);
    KernelModel k = completed_kernel(cs, theta);
    const OperatorStencil st = build_stencil(k, cfg.grid.h);
    const std::vector<OperatorStencil> dirs = direction_stencils(cs);

    std::vector<SampleEval> evals(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        evals[i] = eval_sample(samples[i], cfg, st, &dirs);
    });

    LossGrad out;
    out.grad.assign(cs.free_count(), 0.0);
    double sq = 0.0;
    for (const auto& e : evals) {
        if (!e.ok) {
            out.value = kLossSentinel;
            out.diagnostic = "solver blow-up";
            return out;
        }
        sq += e.sq;
        for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += e.grad_sq[j];
    }
    double prefactor = 0.0;
    if (!samples.empty())
        prefactor = cfg.grid.T_tr /
                    (cfg.grid.dt * cfg.grid.dt * cfg.grid.dt * static_cast<double>(samples.size()));
    for (double& gj : out.grad) gj *= prefactor;

    // Tikhonov term, chained through the elimination.
    std::vector<double> dreg(coeffs.size());
    const double w = 2.0 * cfg.epsilon / static_cast<double>(cfg.degree + 1);
    for (std::size_t m = 0; m < coeffs.size(); ++m) dreg[m] = w * coeffs[m];
    const std::vector<double> dreg_free = chain_to_free(cs, dreg);
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += dreg_free[j];

    out.value = prefactor * sq + regularization(cfg, coeffs);
    out.ok = std::isfinite(out.value);
    for (double gj : out.grad)
        if (!std::isfinite(gj)) out.ok = false;
    if (!out.ok) out.value = kLossSentinel;
    return out;
}

namespace {

double max_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

struct Objective {
    const std::vector<TrainingSample>& samples;
    const TrainConfig& cfg;
    const ConstraintSystem& cs;

    bool eval(const std::vector<double>& x, double& f, std::vector<double>& g) const {
        LossGrad lg = loss_gradient(x, samples, cfg, cs);
        f = lg.value;
        g = std::move(lg.grad);
        return lg.ok;
    }
};

struct WolfeResult {
    bool ok = false;
    double alpha = 0.0;
    double f = 0.0;
    std::vector<double> x, g;
    int evals = 0;
};

/// Strong Wolfe line search (bracket + zoom with bisection).
WolfeResult wolfe_search(const Objective& obj, const std::vector<double>& x0, double f0,
                         const std::vector<double>& g0, const std::vector<double>& d,
                         double alpha_init) {
    constexpr double c1 = 1e-4, c2 = 0.9;
    constexpr int max_evals = 40;
    const double dphi0 = dot(g0, d);
    WolfeResult res;
    if (dphi0 >= 0) return res;

    auto phi = [&](double a, double& f, std::vector<double>& g, double& dphi) -> bool {
        std::vector<double> x(x0.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + a * d[i];
        const bool ok = obj.eval(x, f, g);
        dphi = ok ? dot(g, d) : 0.0;
        res.evals++;
        if (ok) res.x = std::move(x);
        return ok;
    };
    auto accept = [&](double a, double f, std::vector<double> g) {
        res.ok = true;
        res.alpha = a;
        res.f = f;
        res.g = std::move(g);
    };

    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = alpha_init;
    double a_lo = -1, a_hi = -1, f_lo = 0;

    for (int it = 0; it < max_evals && res.evals < max_evals; ++it) {
        double f, dphi;
        std::vector<double> g;
        const bool ok = phi(a, f, g, dphi);
        if (!ok || f > f0 + c1 * a * dphi0 || (it > 0 && f >= f_prev)) {
            a_lo = a_prev;
            f_lo = f_prev;
            a_hi = a;
            break;
        }
        if (std::abs(dphi) <= -c2 * dphi0) {
            accept(a, f, std::move(g));
            return res;
        }
        if (dphi >= 0) {
            a_lo = a;
            f_lo = f;
            a_hi = a_prev;
            break;
        }
        a_prev = a;
        f_prev = f;
        dphi_prev = dphi;
        a *= 2.0;
        if (a > 1e12) return res;
    }
    (void)dphi_prev;
    if (a_lo < 0) return res;

    // zoom
    for (int it = 0; it < max_evals && res.evals < max_evals; ++it) {
        const double am = 0.5 * (a_lo + a_hi);
        double f, dphi;
        std::vector<double> g;
        const bool ok = phi(am, f, g, dphi);
        if (!ok || f > f0 + c1 * am * dphi0 || f >= f_lo) {
            a_hi = am;
        } else {
            if (std::abs(dphi) <= -c2 * dphi0) {
                accept(am, f, std::move(g));
                return res;
            }
            if (dphi * (a_hi - a_lo) >= 0) a_hi = a_lo;
            a_lo = am;
            f_lo = f;
        }
        if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) break;
    }
    return res;
}

}  // namespace

TrainResult minimize(const std::vector<TrainingSample>& samples, const TrainConfig& cfg,
                     std::vector<double> theta_init) {
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::size_t dim = cs.free_count();
    std::vector<double> x = theta_init.empty() ? std::vector<double>(dim, 0.0)
                                               : std::move(theta_init);
    if (x.size() != dim) throw std::invalid_argument("minimize: theta_init has the wrong size");

    const Objective obj{samples, cfg, cs};
    TrainResult result;

    double f;
    std::vector<double> g;
    if (!obj.eval(x, f, g))
        throw std::runtime_error("minimize: objective not finite at the initial point");

    std::vector<double> best_x = x;
    double best_f = f;

    // L-BFGS history
    const std::size_t hist = static_cast<std::size_t>(std::max(1, cfg.lbfgs_history));
    std::vector<std::vector<double>> S, Y;
    std::vector<double> rho_hist;

    bool restarted = false;
    std::string termination = "max_iterations";
    bool converged = false;

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        if (max_norm(g) < cfg.grad_tol) {
            termination = "gradient_tolerance";
            converged = true;
            break;
        }

        // two-loop recursion
        std::vector<double> d = g;
        {
            const std::size_t m = S.size();
            std::vector<double> alpha(m);
            for (std::size_t idx = m; idx-- > 0;) {
                alpha[idx] = rho_hist[idx] * dot(S[idx], d);
                for (std::size_t i = 0; i < dim; ++i) d[i] -= alpha[idx] * Y[idx][i];
            }
            if (m > 0) {
                const double gamma = dot(S[m - 1], Y[m - 1]) / dot(Y[m - 1], Y[m - 1]);
                for (double& di : d) di *= gamma;
            }
            for (std::size_t idx = 0; idx < m; ++idx) {
                const double beta = rho_hist[idx] * dot(Y[idx], d);
                for (std::size_t i = 0; i < dim; ++i) d[i] += S[idx][i] * (alpha[idx] - beta);
            }
            for (double& di : d) di = -di;
        }
        if (dot(g, d) >= 0) {  // not a descent direction; fall back
            S.clear();
            Y.clear();
            rho_hist.clear();
            d = g;
            for (double& di : d) di = -di;
        }

        const double alpha_init = S.empty() ? 1.0 / std::max(1.0, norm2(d)) : 1.0;
        WolfeResult ls = wolfe_search(obj, x, f, g, d, alpha_init);
        if (!ls.ok) {
            if (!restarted) {
                restarted = true;
                S.clear();
                Y.clear();
                rho_hist.clear();
                std::vector<double> sd = g;
                for (double& di : sd) di = -di;
                ls = wolfe_search(obj, x, f, g, sd, 1.0 / std::max(1.0, norm2(sd)));
                d = sd;
            }
            if (!ls.ok) {
                termination = "line_search_failure";
                break;
            }
        }

        std::vector<double> s(dim), y(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            s[i] = ls.x[i] - x[i];
            y[i] = ls.g[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-10 * norm2(s) * norm2(y)) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (S.size() > hist) {
                S.erase(S.begin());
                Y.erase(Y.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }

        const double f_old = f;
        x = ls.x;
        f = ls.f;
        g = ls.g;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        result.report.trace.push_back({iter, f, max_norm(g), ls.alpha});
        if (cfg.progress_every > 0 && iter % cfg.progress_every == 0)
            std::fprintf(stderr, "  iter %4d  loss %.8e  |g| %.3e  step %.3g\n", iter, f,
                         max_norm(g), ls.alpha);

        if (f_old - f <= cfg.loss_tol * std::max(1.0, std::abs(f_old))) {
            termination = "loss_decrease_tolerance";
            converged = true;
            break;
        }
    }
    if (termination == "max_iterations" && max_norm(g) < cfg.grad_tol) converged = true;

    result.theta = best_x;
    result.kernel = completed_kernel(cs, best_x);
    result.report.termination = termination;
    result.report.converged = converged;

    const double resid = constraint_residual(cs, result.kernel.coefficients);
    if (resid > 1e-12)
        throw std::runtime_error("minimize: completed kernel violates the moment constraints (" +
                                 g17(resid) + ")");
    return result;
}

std::vector<VgSample> dns_group_velocity(const Microstructure& ms,
                                         const std::vector<double>& omegas,
                                         const PacketMeasureConfig& cfg) {
    std::vector<VgSample> out(omegas.size());
    parallel_for(omegas.size(), [&](std::size_t i) {
        const dns::PacketSpeed ps = dns::measure_packet_speed(ms, omegas[i], cfg);
        out[i] = {omegas[i], ps.vg, ps.ok, ps.diagnostic};
    });
    return out;
}

double vg_mismatch(const DispersionCurve& model, const std::vector<VgSample>& measured) {
    // First pass band: the increasing prefix of omega(k).
    std::vector<double> ws, vs;
    for (std::size_t i = 0; i < model.samples.size(); ++i) {
        if (i > 0 && model.samples[i].omega <= ws.back()) break;
        ws.push_back(model.samples[i].omega);
        vs.push_back(model.samples[i].vg);
    }
    auto model_vg = [&](double w) -> double {
        if (ws.empty() || w > ws.back()) return 0.0;  // beyond the band: no transport
        auto it = std::upper_bound(ws.begin(), ws.end(), w);
        std::size_t i = (it == ws.begin()) ? 0 : static_cast<std::size_t>(it - ws.begin()) - 1;
        if (i >= ws.size() - 1) i = ws.size() - 2;
        const double span = ws[i + 1] - ws[i];
        const double f = span > 0 ? (w - ws[i]) / span : 0.0;
        return (1.0 - f) * vs[i] + f * vs[i + 1];
    };
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& m : measured) {
        if (!m.ok) continue;
        const double d = model_vg(m.omega) - m.vg;
        acc += d * d;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("vg_mismatch: no usable measured samples");
    return std::sqrt(acc / static_cast<double>(count));
}

std::vector<SweepRow> sweep(const Microstructure& ms, const std::vector<Scenario>& scenarios,
                            const TrainConfig& base, const std::vector<double>& deltas,
                            const std::vector<double>& epsilons,
                            const std::vector<VgSample>& measured) {
    if (deltas.empty() || epsilons.empty())
        throw std::invalid_argument("sweep: delta and epsilon grids must be nonempty");
    std::vector<SweepRow> rows;
    for (double delta : deltas) {
        TrainConfig cfg = base;
        cfg.grid.delta = delta;
        std::vector<TrainingSample> samples;
        std::string build_error;
        try {
            samples = build_training_set(scenarios, ms, cfg.grid);
        } catch (const std::exception& e) {
            build_error = e.what();
        }
        for (double eps : epsilons) {
            SweepRow row;
            row.delta = delta;
            row.epsilon = eps;
            if (!build_error.empty()) {
                row.note = build_error;
                rows.push_back(row);
                continue;
            }
            try {
                cfg.epsilon = eps;
                const TrainResult tr = minimize(samples, cfg);
                const DispersionCurve curve = dispersion_curve(tr.kernel, cfg.grid.h);
                row.mismatch = vg_mismatch(curve, measured);
                row.final_loss = tr.report.trace.empty() ? 0.0 : tr.report.trace.back().loss;
                row.ok = true;
                row.note = tr.report.termination;
            } catch (const std::exception& e) {
                row.note = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_loss_report_csv(const std::string& path, const LossReport& report,
                           const std::string& config_id) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (!config_id.empty()) f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "# termination=" << report.termination << "\n";
    f << "iter,loss,grad_norm,step_length\n";
    for (const auto& r : report.trace)
        f << r.iter << ',' << g17(r.loss) << ',' << g17(r.grad_norm) << ',' << g17(r.step_length)
          << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_id) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (!config_id.empty()) f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "delta,epsilon,vg_mismatch,final_loss\n";
    for (const auto& r : rows) {
        f << g17(r.delta) << ',' << g17(r.epsilon) << ','
          << (r.ok ? g17(r.mismatch) : std::string("nan")) << ','
          << (r.ok ? g17(r.final_loss) : std::string("nan")) << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace nlwave::train
