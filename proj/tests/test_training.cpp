#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nlwave/nonlocal.hpp"
#include "nlwave/training.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nlwave;
using namespace nlwave::train;

using support::manufactured_sample;
using support::paper_bar;
using support::rich_forcing;
using support::small_config;

TEST_CASE("elimination meets both constraint targets") {
    const ConstraintSystem cs = make_constraints(24, 1.2, 0.05, 1.0, std::sqrt(0.4), -0.0057);
    CHECK(cs.free_count() == 23);

    SUBCASE("at the origin the tail pair solves the bare 2x2 system") {
        const std::vector<double> theta(cs.free_count(), 0.0);
        const auto full = eliminate(cs, theta);
        CHECK(constraint_residual(cs, full) < 1e-12);
        for (std::size_t j = 0; j < cs.free_count(); ++j) CHECK(full[j] == 0.0);
    }
    SUBCASE("random free coefficients always complete feasibly") {
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> th(-1.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> theta(cs.free_count());
            for (auto& t : theta) t = th(rng);
            CHECK(constraint_residual(cs, eliminate(cs, theta)) < 1e-12);
        }
    }
    SUBCASE("wrong arity is rejected") {
        CHECK_THROWS(eliminate(cs, std::vector<double>(7, 0.0)));
    }
}

TEST_CASE("elimination on M=2 matches the continuous-moment hand solve") {
    // Fine quadrature makes the discrete moments approach the Beta-identity
    // values; the 2x2 solve must then approach the closed-form solution.
    const double delta = 0.5, c0 = 1.0, curvature = -0.05, rho = 1.0;
    const double h = delta / 4000.0;
    const ConstraintSystem cs = make_constraints(2, delta, h, rho, c0, curvature);

    const double theta0 = 0.7;
    const auto full = eliminate(cs, std::vector<double>{theta0});

    // continuous moments via the Beta identity
    double p2[3], p4[3];
    for (int m = 0; m <= 2; ++m) {
        p2[m] = oracle::continuous_moment(m, 2, 2, delta);
        p4[m] = oracle::continuous_moment(m, 2, 4, delta);
    }
    const double r1 = rho * c0 * c0 - theta0 * p2[0];
    const double r2 = -4.0 * rho * c0 * c0 * c0 * curvature - theta0 * p4[0];
    const double det = p2[1] * p4[2] - p2[2] * p4[1];
    const double c1 = (r1 * p4[2] - p2[2] * r2) / det;
    const double c2 = (p2[1] * r2 - r1 * p4[1]) / det;

    CHECK(full[1] == doctest::Approx(c1).epsilon(5e-3));
    CHECK(full[2] == doctest::Approx(c2).epsilon(5e-3));
}

TEST_CASE("completed kernels keep the long-wave speed at c0 for any theta") {
    const double c0 = std::sqrt(0.4);
    const ConstraintSystem cs = make_constraints(24, 1.2, 0.05, 1.0, c0, -0.0057);
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> th(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> theta(cs.free_count());
        for (auto& t : theta) t = th(rng);
        const KernelModel k = completed_kernel(cs, theta);
        const DispersionCurve curve = dispersion_curve(k, 0.05, 4000);
        const auto& s1 = curve.samples[1];
        CHECK(s1.omega / s1.k == doctest::Approx(c0).epsilon(1e-3));
    }
}

TEST_CASE("loss at the manufactured optimum reduces to the regularizer") {
    TrainConfig cfg = small_config();
    cfg.degree = 4;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::vector<double> theta_true = {0.3, -0.2, 0.5};
    const std::vector<TrainingSample> samples = {
        manufactured_sample(cfg, cs, theta_true, rich_forcing(), 1.7, false)};

    const LossValue at_opt = loss(theta_true, samples, cfg, cs);
    REQUIRE(at_opt.ok);
    double reg = 0.0;
    for (double c : eliminate(cs, theta_true)) reg += c * c;
    reg *= cfg.epsilon / (cfg.degree + 1);
    CHECK(at_opt.value == doctest::Approx(reg).epsilon(1e-12));

    TrainConfig no_reg = cfg;
    no_reg.epsilon = 0.0;
    CHECK(loss(theta_true, samples, no_reg, cs).value == 0.0);

    // perturbing theta switches on a strictly positive data-fit term
    std::vector<double> off = theta_true;
    off[1] += 0.05;
    double reg_off = 0.0;
    for (double c : eliminate(cs, off)) reg_off += c * c;
    reg_off *= cfg.epsilon / (cfg.degree + 1);
    CHECK(loss(off, samples, cfg, cs).value - reg_off > 1e-10);
}

TEST_CASE("loss is invariant under duplication and reordering") {
    TrainConfig cfg = small_config();
    cfg.degree = 4;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::vector<double> theta_true = {0.3, -0.2, 0.5};
    const TrainingSample s1 =
        manufactured_sample(cfg, cs, theta_true, rich_forcing(), 1.7, true);
    const TrainingSample s2 = manufactured_sample(
        cfg, cs, theta_true,
        [](double x, double t) { return std::cos(3.0 * x) * std::exp(-t); }, 1.7, true);

    const std::vector<double> theta = {0.1, 0.4, -0.3};
    const double base = loss(theta, {s1, s2}, cfg, cs).value;
    CHECK(loss(theta, {s2, s1}, cfg, cs).value == doctest::Approx(base).epsilon(1e-14));
    CHECK(loss(theta, {s1, s2, s1, s2}, cfg, cs).value == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("gradient vanishes at the manufactured optimum") {
    TrainConfig cfg = small_config();
    cfg.degree = 4;
    cfg.epsilon = 0.0;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::vector<double> theta_true = {0.3, -0.2, 0.5};
    const std::vector<TrainingSample> samples = {
        manufactured_sample(cfg, cs, theta_true, rich_forcing(), 1.7, false)};
    const LossGrad lg = loss_gradient(theta_true, samples, cfg, cs);
    REQUIRE(lg.ok);
    for (double g : lg.grad) CHECK(std::abs(g) < 1e-10);
}

TEST_CASE("regularizer-only gradient matches the chained analytic form") {
    TrainConfig cfg = small_config();
    cfg.epsilon = 0.37;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::vector<double> theta = {0.2, -0.7, 0.05, 1.1, -0.4};
    const LossGrad lg = loss_gradient(theta, {}, cfg, cs);
    REQUIRE(lg.ok);

    const auto full = eliminate(cs, theta);
    const double w = 2.0 * cfg.epsilon / (cfg.degree + 1);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double expect = w * (full[j] + cs.tail_jac[j] * full[cfg.degree - 1] +
                                   cs.tail_jac[cs.free_count() + j] * full[cfg.degree]);
        CHECK(lg.grad[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("forward-sensitivity gradient matches central finite differences") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> th(-0.5, 0.5);

    for (int instance = 0; instance < 10; ++instance) {
        TrainConfig cfg = small_config();  // M=6, T_tr/dt = 20 steps, delta = 0.3
        const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h,
                                                     cfg.rho, cfg.c0, cfg.curvature);
        std::vector<double> theta_data(cs.free_count()), theta(cs.free_count());
        for (auto& t : theta_data) t = th(rng);
        for (auto& t : theta) t = th(rng);

        const std::vector<TrainingSample> samples = {
            manufactured_sample(cfg, cs, theta_data, rich_forcing(), 1.7, true)};

        const LossGrad lg = loss_gradient(theta, samples, cfg, cs);
        REQUIRE(lg.ok);
        double gmax = 0.0;
        for (double g : lg.grad) gmax = std::max(gmax, std::abs(g));

        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double hj = 1e-5 * (1.0 + std::abs(theta[j]));
            std::vector<double> tp = theta, tm = theta;
            tp[j] += hj;
            tm[j] -= hj;
            const double fd =
                (loss(tp, samples, cfg, cs).value - loss(tm, samples, cfg, cs).value) / (2.0 * hj);
            const double denom = std::max(std::abs(fd), 1e-3 * gmax);
            CHECK(std::abs(lg.grad[j] - fd) / denom < 1e-5);
        }
    }
}

TEST_CASE("pure-regularization minimization lands on the analytic least-norm point") {
    TrainConfig cfg = small_config();  // degree 6 -> 5 free coefficients
    cfg.epsilon = 1.0;
    cfg.grad_tol = 1e-9;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);

    const TrainResult res = minimize({}, cfg);
    CHECK(res.report.converged);
    CHECK(static_cast<int>(res.report.trace.size()) <= cfg.degree);

    // normal equations for min ||bias + E theta||^2 over the affine completion
    const std::size_t n = cs.free_count();
    std::vector<double> A(n * n, 0.0), b(n, 0.0);
    auto col = [&](std::size_t j, std::size_t row) -> double {
        if (row < n) return row == j ? 1.0 : 0.0;
        return cs.tail_jac[(row - n) * n + j];
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t row = 0; row < n + 2; ++row) A[i * n + j] += col(i, row) * col(j, row);
        b[i] = -(col(i, n) * cs.tail_bias[0] + col(i, n + 1) * cs.tail_bias[1]);
    }
    // tiny Gaussian elimination
    std::vector<double> x = b;
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t piv = p;
        for (std::size_t r = p + 1; r < n; ++r)
            if (std::abs(A[r * n + p]) > std::abs(A[piv * n + p])) piv = r;
        for (std::size_t c = 0; c < n; ++c) std::swap(A[p * n + c], A[piv * n + c]);
        std::swap(x[p], x[piv]);
        for (std::size_t r = p + 1; r < n; ++r) {
            const double f = A[r * n + p] / A[p * n + p];
            for (std::size_t c = p; c < n; ++c) A[r * n + c] -= f * A[p * n + c];
            x[r] -= f * x[p];
        }
    }
    for (std::size_t p = n; p-- > 0;) {
        for (std::size_t c = p + 1; c < n; ++c) x[p] -= A[p * n + c] * x[c];
        x[p] /= A[p * n + p];
    }

    for (std::size_t j = 0; j < n; ++j)
        CHECK(res.theta[j] == doctest::Approx(x[j]).epsilon(1e-6));
}

TEST_CASE("manufactured kernel is recovered by training") {
    TrainConfig cfg = small_config();
    cfg.degree = 4;
    cfg.epsilon = 1e-8;
    cfg.grid.T_tr = 0.6;
    cfg.max_iterations = 400;
    const ConstraintSystem cs = make_constraints(cfg.degree, cfg.grid.delta, cfg.grid.h, cfg.rho,
                                                 cfg.c0, cfg.curvature);
    const std::vector<double> theta_true = {0.3, -0.2, 0.5};
    const std::vector<TrainingSample> samples = {
        manufactured_sample(cfg, cs, theta_true, rich_forcing(), 1.7, true)};

    const TrainResult res = minimize(samples, cfg);
    const KernelModel truth = completed_kernel(cs, theta_true);

    double truth_scale = 0.0, worst = 0.0;
    for (std::size_t m = 0; m < truth.coefficients.size(); ++m) {
        truth_scale = std::max(truth_scale, std::abs(truth.coefficients[m]));
        worst = std::max(worst, std::abs(res.kernel.coefficients[m] - truth.coefficients[m]));
    }
    CHECK(worst / truth_scale < 1e-3);
    CHECK(constraint_residual(cs, res.kernel.coefficients) < 1e-12);

    // accepted losses are non-increasing (Wolfe line search)
    for (std::size_t i = 1; i < res.report.trace.size(); ++i)
        CHECK(res.report.trace[i].loss <= res.report.trace[i - 1].loss + 1e-15);
}

TEST_CASE("group velocity of the homogeneous bar is the material speed") {
    Microstructure ms;
    ms.layer_length = 0.2;
    ms.material_a = {1.0, 1.0};
    ms.material_b = {1.0, 1.0};
    PacketMeasureConfig cfg;
    cfg.travel_time = 40.0;
    const auto vg = dns_group_velocity(ms, {0.6, 1.4}, cfg);
    REQUIRE(vg.size() == 2);
    for (const auto& s : vg) {
        REQUIRE(s.ok);
        CHECK(s.vg == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("group velocity collapses near the bilayer band stop") {
    const Microstructure ms = paper_bar();
    const oracle::Bloch bloch(ms);
    PacketMeasureConfig cfg;
    cfg.travel_time = 60.0;
    cfg.min_envelope_width = 20.0;  // narrow spectrum so the stop band bites

    const auto vg = dns_group_velocity(ms, {0.3, 3.9, 4.15}, cfg);
    REQUIRE(vg[0].ok);
    // omega -> 0 limit approaches the effective speed
    CHECK(vg[0].vg == doctest::Approx(std::sqrt(0.4)).epsilon(0.02));
    // transport slows toward the band stop and nearly halts beside it
    REQUIRE(vg[1].ok);
    CHECK(vg[1].vg == doctest::Approx(*bloch.group_velocity(3.9)).epsilon(0.35));
    REQUIRE(vg[2].ok);
    CHECK(vg[2].vg < vg[1].vg);
    CHECK(vg[2].vg < 0.45 * std::sqrt(0.4));
}

TEST_CASE("vg mismatch: self-comparison scores zero") {
    KernelModel k;
    k.delta = 1.2;
    k.degree = 24;
    k.rho = 1.0;
    const ConstraintSystem cs = make_constraints(24, 1.2, 0.05, 1.0, std::sqrt(0.4), -0.0057);
    k.coefficients = eliminate(cs, std::vector<double>(23, 0.1));
    const DispersionCurve curve = dispersion_curve(k, 0.05);

    std::vector<VgSample> measured;
    for (std::size_t i = 2; i < curve.samples.size(); i += 2) {
        if (curve.samples[i].omega <= curve.samples[i - 1].omega) break;  // band edge
        measured.push_back({curve.samples[i].omega, curve.samples[i].vg, true, ""});
    }
    REQUIRE(measured.size() >= 3);
    CHECK(vg_mismatch(curve, measured) < 1e-12);

    // beyond the model band the model transports nothing
    std::vector<VgSample> above = {{1e9, 0.0, true, ""}};
    CHECK(vg_mismatch(curve, above) == 0.0);
}

TEST_CASE("singleton sweep trains one pair and reports it") {
    const Microstructure ms = paper_bar();
    TrainConfig base = small_config();
    base.degree = 4;
    base.max_iterations = 60;
    base.c0 = std::sqrt(0.4);
    base.curvature = -0.0057;

    const std::vector<Scenario> scenarios = {oscillating_source(2, ms)};
    const std::vector<VgSample> measured = {
        {0.5, 0.62, true, ""}, {1.5, 0.55, true, ""}, {3.0, 0.3, true, ""}};

    const auto rows = sweep(ms, scenarios, base, {0.3}, {0.01}, measured);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ok);
    CHECK(rows[0].delta == 0.3);
    CHECK(rows[0].epsilon == 0.01);
    CHECK(std::isfinite(rows[0].mismatch));

    // failures are recorded, not fatal: a horizon that does not divide h
    const auto bad = sweep(ms, scenarios, base, {0.317}, {0.01}, measured);
    REQUIRE(bad.size() == 1);
    CHECK_FALSE(bad[0].ok);
    CHECK_FALSE(bad[0].note.empty());
}
