#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "nlwave/kernel.hpp"
#include "nlwave/nonlocal.hpp"

using namespace nlwave;
using namespace nlwave::nonlocal;

namespace {

KernelModel smooth_kernel(double amplitude = 1.0, double delta = 0.3, int degree = 4) {
    KernelModel k;
    k.delta = delta;
    k.degree = degree;
    k.rho = 1.0;
    k.coefficients.assign(degree + 1, amplitude);
    return k;
}

}  // namespace

TEST_CASE("grid split into interior and layer") {
    const UniformGrid g = make_grid(1.0, 0.05, 0.3);
    CHECK(g.size() == 53);  // 2*(1+0.3)/0.05 + 1
    CHECK(g.x.front() == doctest::Approx(-1.3).epsilon(1e-15));
    CHECK(g.x.back() == doctest::Approx(1.3).epsilon(1e-15));
    // +-b are layer points, first interior is -b+h
    CHECK(g.x[g.interior_lo - 1] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(g.x[g.interior_lo] == doctest::Approx(-0.95).epsilon(1e-12));
    CHECK(g.x[g.interior_hi] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(g.interior_count() == 39);

    CHECK_THROWS_AS(make_grid(1.0, 0.05, 0.33), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.02, 0.05, 0.3), std::invalid_argument);
}

TEST_CASE("bootstrap start values") {
    const KernelModel k = smooth_kernel();
    const UniformGrid g = make_grid(1.0, 0.05, k.delta);
    const OperatorStencil st = build_stencil(k, g.h);
    const double dt = 0.02;

    std::vector<double> zeros(g.size(), 0.0);

    SUBCASE("all-zero data stays zero") {
        const SimState s = bootstrap(g, st, zeros, zeros, {}, BoundarySource::zero(), dt);
        for (double u : s.u_curr) CHECK(u == 0.0);
    }
    SUBCASE("constant velocity advances the interior by dt") {
        std::vector<double> v0(g.size(), 1.0);
        const SimState s = bootstrap(g, st, zeros, v0, {}, BoundarySource::zero(), dt);
        for (std::size_t i = g.interior_lo; i <= g.interior_hi; ++i)
            CHECK(s.u_curr[i] == doctest::Approx(dt).epsilon(1e-15));
    }
    SUBCASE("constant displacement is an equilibrium") {
        const double c = 0.8;
        std::vector<double> u0(g.size(), c);
        auto src = BoundarySource::from_function([c](double, double) { return c; });
        const SimState s = bootstrap(g, st, u0, zeros, {}, src, dt);
        for (double u : s.u_curr) CHECK(u == c);
    }
}

TEST_CASE("layer always equals the source after every step") {
    const KernelModel k = smooth_kernel();
    const UniformGrid g = make_grid(1.0, 0.05, k.delta);
    const OperatorStencil st = build_stencil(k, g.h);
    const double dt = 0.02;

    auto src_fn = [](double x, double t) { return std::sin(3.0 * x) * std::cos(2.0 * t) + 0.3; };
    auto src = BoundarySource::from_function(src_fn);

    std::vector<double> zeros(g.size(), 0.0);
    SimState s = bootstrap(g, st, zeros, zeros, {}, src, dt);
    for (int n = 1; n <= 40; ++n) {
        step(s, g, st, {}, src);
        const double t = s.n * s.dt;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (i >= g.interior_lo && i <= g.interior_hi) continue;
            CHECK(s.u_curr[i] == src_fn(g.x[i], t));
        }
    }
}

TEST_CASE("constant equilibrium persists for 10^4 steps to machine precision") {
    const KernelModel k = smooth_kernel(0.7, 0.25, 3);
    const UniformGrid g = make_grid(0.5, 0.05, k.delta);
    const OperatorStencil st = build_stencil(k, g.h);
    const double c = 1.37, dt = 0.02;

    std::vector<double> u0(g.size(), c), zeros(g.size(), 0.0);
    auto src = BoundarySource::from_function([c](double, double) { return c; });
    SimState s = bootstrap(g, st, u0, zeros, {}, src, dt);
    for (int n = 1; n <= 10000; ++n) step(s, g, st, {}, src);
    for (double u : s.u_curr) CHECK(u == c);
}

TEST_CASE("run is linear in state, forcing, and source") {
    const KernelModel k = smooth_kernel();
    const UniformGrid g = make_grid(1.0, 0.05, k.delta);
    const double dt = 0.02, T = 0.4;
    const double alpha = 1.7, beta = -0.6;

    auto run_case = [&](double a, double b) {
        InitialData ic;
        ic.u0 = [a, b](double x) { return a * std::exp(-9.0 * x * x) + b * x * 0.1; };
        ic.v0 = [a](double x) { return a * std::cos(2.0 * x); };
        auto f = [a, b](double x, double t) { return (a + b) * std::sin(x + t); };
        auto src = BoundarySource::from_function(
            [a, b](double x, double t) { return a * 0.1 * x + b * 0.05 * t; });
        RunOptions opts;
        return run(g, k, ic, f, src, T, dt, opts);
    };
    const FieldSeries fa = run_case(1.0, 0.0);
    const FieldSeries fb = run_case(0.0, 1.0);
    const FieldSeries fc = run_case(alpha, beta);
    double worst = 0.0;
    for (std::size_t i = 0; i < fa.u.size(); ++i)
        worst = std::max(worst, std::abs(alpha * fa.u[i] + beta * fb.u[i] - fc.u[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("periodic eigenmode oscillates at the stencil dispersion frequency") {
    // Periodic wrap of the same interior recursion: the mode cos(kx) must
    // oscillate at omega(k) of the dispersion relation, up to O(dt^2).
    const KernelModel k = smooth_kernel(1.0, 0.3, 4);
    const double h = 0.05;
    const OperatorStencil st = build_stencil(k, h);
    const int P = 400;  // domain length 20
    const int J = st.reach;

    for (int mode : {3, 8}) {
        const double kk = 2.0 * std::numbers::pi * mode / (P * h);
        const double omega = std::sqrt(omega_squared(st, kk));

        auto wrap_apply = [&](const std::vector<double>& u, int i) {
            double acc = 0.0;
            for (int j = -J; j <= J; ++j)
                acc += st.weights[j + J] * (u[(i + j + P) % P] - u[i]);
            return acc;
        };
        auto project = [&](const std::vector<double>& u) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < P; ++i) {
                const double c = std::cos(kk * h * i);
                num += u[i] * c;
                den += c * c;
            }
            return num / den;
        };

        auto measure = [&](double dt) {
            std::vector<double> up(P), uc(P), un(P);
            for (int i = 0; i < P; ++i) up[i] = std::cos(kk * h * i);
            for (int i = 0; i < P; ++i) uc[i] = up[i] + 0.5 * dt * dt * wrap_apply(up, i);
            double a_prev = project(up), a_curr = project(uc);
            double theta_sum = 0.0;
            int theta_count = 0;
            for (int n = 1; n <= 40; ++n) {
                for (int i = 0; i < P; ++i)
                    un[i] = 2.0 * uc[i] - up[i] + dt * dt * wrap_apply(uc, i);
                const double a_next = project(un);
                if (std::abs(a_curr) > 0.2) {
                    theta_sum +=
                        std::acos(std::clamp((a_next + a_prev) / (2.0 * a_curr), -1.0, 1.0));
                    ++theta_count;
                }
                std::swap(up, uc);
                std::swap(uc, un);
                a_prev = a_curr;
                a_curr = a_next;
            }
            return theta_sum / theta_count / dt;
        };

        const double w1 = measure(0.02);
        REQUIRE(omega * 0.02 < 0.2);
        CHECK(w1 == doctest::Approx(omega).epsilon(0.01));  // within 1% for dt*omega <= 0.2

        // O(dt^2): halving dt shrinks the frequency error by about 4
        const double e1 = std::abs(w1 - omega);
        const double e2 = std::abs(measure(0.01) - omega);
        CHECK(e2 < 0.35 * e1);
    }
}

TEST_CASE("manufactured solution converges at second order in time") {
    const KernelModel k = smooth_kernel(1.3, 0.3, 5);
    const UniformGrid g = make_grid(1.0, 0.05, k.delta);
    const OperatorStencil st = build_stencil(k, g.h);

    const double q = 2.2, nu = 1.7, T = 1.0;
    auto exact = [&](double x, double t) { return std::cos(q * x) * std::sin(nu * t); };
    // forcing from the *discrete* operator, so time stepping is the only error
    auto forcing = [&](double x, double t) {
        double lap = 0.0;
        for (int j = -st.reach; j <= st.reach; ++j)
            lap += st.weights[j + st.reach] * (exact(x + j * g.h, t) - exact(x, t));
        return -nu * nu * exact(x, t) - lap;
    };
    InitialData ic;
    ic.u0 = [&](double x) { return exact(x, 0.0); };
    ic.v0 = [&](double x) { return nu * std::cos(q * x); };
    auto src = BoundarySource::from_function(exact);

    auto error_at = [&](double dt) {
        RunOptions opts;
        opts.record_times = {T};
        const FieldSeries s = run(g, k, ic, forcing, src, T, dt, opts);
        double worst = 0.0;
        for (std::size_t i = 0; i < s.nx(); ++i)
            worst = std::max(worst, std::abs(s.u_at(0, i) - exact(s.positions[i], T)));
        return worst;
    };

    const double e1 = error_at(0.02);
    const double e2 = error_at(0.01);
    const double e3 = error_at(0.005);
    const double order1 = std::log2(e1 / e2);
    const double order2 = std::log2(e2 / e3);
    INFO("orders ", order1, " ", order2);
    CHECK(order1 >= 1.9);
    CHECK(order2 >= 1.9);
}

TEST_CASE("velocity recovery") {
    FieldSeries s;
    s.positions = {0.0, 1.0, 2.0};
    const double dt = 0.1, omega = 2.0;
    for (int n = 0; n <= 20; ++n) s.times.push_back(dt * n);

    SUBCASE("u = t gives v = 1 exactly; constant u gives 0") {
        for (double t : s.times)
            for (std::size_t i = 0; i < 3; ++i) {
                s.u.push_back(i == 2 ? 5.0 : t);
                s.v.push_back(0.0);
            }
        const FieldSeries v = velocity_series(s);
        for (std::size_t n = 0; n < v.nt(); ++n) {
            CHECK(v.v_at(n, 0) == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(v.v_at(n, 2) == 0.0);
        }
    }
    SUBCASE("u = sin(omega t) recovers omega cos(omega t) to O(dt^2)") {
        for (double t : s.times)
            for (std::size_t i = 0; i < 3; ++i) {
                s.u.push_back(std::sin(omega * t));
                s.v.push_back(0.0);
            }
        const FieldSeries v = velocity_series(s);
        for (std::size_t n = 1; n + 1 < v.nt(); ++n) {
            const double expect = omega * std::cos(omega * v.times[n]);
            const double bound = std::pow(omega * dt, 2) / 6.0 * omega + 1e-12;
            CHECK(std::abs(v.v_at(n, 0) - expect) <= bound);
        }
    }
    SUBCASE("fewer than three snapshots is an error") {
        FieldSeries tiny;
        tiny.positions = {0.0};
        tiny.times = {0.0, 0.1};
        tiny.u = {0.0, 0.0};
        tiny.v = {0.0, 0.0};
        CHECK_THROWS_AS(velocity_series(tiny), std::invalid_argument);
    }
}

TEST_CASE("stability warning fires for dt * omega_max > 2") {
    KernelModel k = smooth_kernel(1e4, 0.25, 3);
    const UniformGrid g = make_grid(0.5, 0.05, k.delta);
    InitialData ic;
    RunOptions opts;
    opts.check_stability = true;
    std::vector<std::string> warnings;
    opts.warnings = &warnings;
    opts.record_times = {0.1};
    run(g, k, ic, {}, BoundarySource::zero(), 0.1, 0.02, opts);
    bool found = false;
    for (const auto& w : warnings) found |= w.find("stability") != std::string::npos;
    CHECK(found);
}

TEST_CASE("series source with mismatched sampling is rejected") {
    const KernelModel k = smooth_kernel();
    const UniformGrid g = make_grid(1.0, 0.05, k.delta);
    auto series = std::make_shared<FieldSeries>();
    series->positions = g.x;            // covers the layer
    series->times = {0.0, 0.03, 0.06};  // not the solver dt
    series->u.assign(3 * g.size(), 0.0);
    series->v.assign(3 * g.size(), 0.0);
    InitialData ic;
    RunOptions opts;
    opts.record_times = {0.04};
    CHECK_THROWS(run(g, k, ic, {}, BoundarySource::from_series(series), 0.04, 0.02, opts));
}
