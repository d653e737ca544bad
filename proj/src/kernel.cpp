#include "nlwave/kernel.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlwave/field_series.hpp"

namespace nlwave {

namespace {

// Binomial coefficients via Pascal's triangle; exact in double up to M=56,
// accurate to a few ulp beyond.
const std::vector<double>& binomial_row(int M) {
    static thread_local std::vector<std::vector<double>> cache;
    if (M < static_cast<int>(cache.size()) && !cache[M].empty()) return cache[M];
    if (M >= static_cast<int>(cache.size())) cache.resize(M + 1);
    for (int n = 0; n <= M; ++n) {
        if (!cache[n].empty()) continue;
        cache[n].resize(n + 1);
        cache[n][0] = cache[n][n] = 1.0;
        for (int j = 1; j < n; ++j) cache[n][j] = cache[n - 1][j - 1] + cache[n - 1][j];
    }
    return cache[M];
}

int stencil_reach(double delta, double h) {
    const double j_real = delta / h;
    const int j = static_cast<int>(std::lround(j_real));
    if (j < 1 || std::abs(j_real - j) > 1e-9 * std::max(1.0, j_real))
        throw std::invalid_argument("delta/h = " + g17(j_real) +
                                    " must be an integer so quadrature nodes reach the horizon");
    return j;
}

}  // namespace

void validate(const KernelModel& k) {
    if (k.delta <= 0) throw std::invalid_argument("kernel: delta must be positive");
    if (k.degree < 2) throw std::invalid_argument("kernel: degree must be at least 2");
    if (k.coefficients.size() != static_cast<std::size_t>(k.degree) + 1)
        throw std::invalid_argument("kernel: expected degree+1 coefficients");
    if (k.rho <= 0) throw std::invalid_argument("kernel: rho must be positive");
}

double bernstein(int m, int M, double x) {
    if (m < 0 || M < 0 || m > M) throw std::domain_error("bernstein: need 0 <= m <= M");
    if (x < 0.0 || x > 1.0) throw std::domain_error("bernstein: x outside [0,1]");
    return binomial_row(M)[m] * std::pow(x, m) * std::pow(1.0 - x, M - m);
}

namespace {

/// Bernstein combination at s in [0,1], scaled by 1/delta^3.
double kernel_value_unit(const KernelModel& k, double s) {
    const auto& binom = binomial_row(k.degree);
    const int M = k.degree;
    double sp = 1.0;  // s^m
    std::vector<double> terms(M + 1);
    for (int m = 0; m <= M; ++m) {
        terms[m] = k.coefficients[m] * binom[m] * sp;
        sp *= s;
    }
    double acc = 0.0;
    double q = 1.0;  // (1-s)^(M-m), built from m = M down
    for (int m = M; m >= 0; --m) {
        acc += terms[m] * q;
        q *= (1.0 - s);
    }
    return acc / (k.delta * k.delta * k.delta);
}

}  // namespace

double kernel_value(const KernelModel& k, double y) {
    const double r = std::abs(y);
    if (r > k.delta) return 0.0;
    return kernel_value_unit(k, std::min(r / k.delta, 1.0));
}

OperatorStencil build_stencil(const KernelModel& k, double h) {
    validate(k);
    if (h <= 0) throw std::invalid_argument("build_stencil: h must be positive");
    const int J = stencil_reach(k.delta, h);
    OperatorStencil st;
    st.h = h;
    st.reach = J;
    st.rho = k.rho;
    st.weights.resize(2 * J + 1);
    // The node |j| = J is the horizon endpoint by construction; clamping the
    // argument keeps the stencil, the moment sums, and the dispersion sums on
    // identical weights even when J*h lands a rounding error beyond delta.
    for (int j = -J; j <= J; ++j)
        st.weights[j + J] = kernel_value_unit(k, std::min(std::abs(j) * h / k.delta, 1.0)) * h;
    return st;
}

double apply_stencil(const OperatorStencil& st, std::span<const double> u, std::size_t i) {
    const int J = st.reach;
    if (static_cast<std::ptrdiff_t>(i) < J || i + J >= u.size())
        throw std::out_of_range("apply_stencil: neighborhood [" +
                                std::to_string(static_cast<long>(i) - J) + ", " +
                                std::to_string(i + J) + "] exceeds field of size " +
                                std::to_string(u.size()));
    // Difference form so constants are annihilated exactly.
    double acc = 0.0;
    const double* base = u.data() + i - J;
    const double ui = u[i];
    for (int j = 0; j <= 2 * J; ++j) acc += st.weights[j] * (base[j] - ui);
    return acc;
}

std::vector<double> discrete_moments(int degree, double delta, double h, int power) {
    if (degree < 0 || power < 0) throw std::invalid_argument("discrete_moments: bad arguments");
    const int J = stencil_reach(delta, h);
    const double d3 = delta * delta * delta;
    std::vector<double> out(degree + 1, 0.0);
    for (int q = 1; q <= J; ++q) {
        const double y = q * h;
        const double yp = std::pow(y, power) / d3 * h;
        const double s = std::min(y / delta, 1.0);
        for (int m = 0; m <= degree; ++m) out[m] += yp * bernstein(m, degree, s);
    }
    return out;
}

double omega_squared(const OperatorStencil& st, double k) {
    const int J = st.reach;
    double acc = 0.0;
    for (int j = 1; j <= J; ++j)
        acc += st.weights[j + J] * (1.0 - std::cos(k * j * st.h));
    return 2.0 * acc / st.rho;
}

DispersionCurve dispersion_curve(const KernelModel& kern, double h, int n_intervals) {
    if (n_intervals < 2) throw std::invalid_argument("dispersion_curve: need at least 2 intervals");
    const OperatorStencil st = build_stencil(kern, h);
    const double dk = 2.0 * std::numbers::pi / (n_intervals * h);

    DispersionCurve curve;
    curve.samples.resize(n_intervals + 1);
    for (int i = 0; i <= n_intervals; ++i) {
        auto& s = curve.samples[i];
        s.k = i * dk;
        const double w2 = omega_squared(st, s.k);
        s.stable = (w2 >= 0.0);
        if (!s.stable) curve.any_unstable = true;
        s.omega = std::sqrt(std::max(w2, 0.0));
    }
    auto& ss = curve.samples;
    for (int i = 0; i <= n_intervals; ++i) {
        const int lo = std::max(i - 1, 0);
        const int hi = std::min(i + 1, n_intervals);
        ss[i].vg = (ss[hi].omega - ss[lo].omega) / (ss[hi].k - ss[lo].k);
    }
    curve.band_stop = find_band_stop(curve);
    return curve;
}

std::optional<double> find_band_stop(const DispersionCurve& c, double reference_speed) {
    if (c.samples.size() < 2) return std::nullopt;
    const double ref = reference_speed > 0 ? reference_speed : c.samples.front().vg;
    const double threshold = 0.02 * ref;
    if (!(threshold > 0)) return std::nullopt;
    // Every lattice dispersion flattens at the grid zone edge (k near pi/h,
    // half of the swept range); crossings there are discretization artifacts,
    // not a band stop.
    const double k_limit = 0.45 * c.samples.back().k;
    for (std::size_t i = 1; i < c.samples.size(); ++i) {
        const auto& a = c.samples[i - 1];
        const auto& b = c.samples[i];
        if (a.k > k_limit) break;
        if (a.vg >= threshold && b.vg < threshold) {
            const double f = (a.vg - threshold) / (a.vg - b.vg);
            const double w = a.omega + f * (b.omega - a.omega);
            if (w > 0) return w;
        }
    }
    return std::nullopt;
}

void save_kernel(const std::string& path, const KernelModel& k, const std::string& config_id) {
    validate(k);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (!config_id.empty()) f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "delta = " << g17(k.delta) << "\n";
    f << "M = " << k.degree << "\n";
    f << "rho = " << g17(k.rho) << "\n";
    f << "coefficients = ";
    for (std::size_t m = 0; m < k.coefficients.size(); ++m) {
        if (m) f << ',';
        f << g17(k.coefficients[m]);
    }
    f << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

KernelModel load_kernel(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    KernelModel k;
    k.coefficients.clear();
    bool saw_delta = false, saw_m = false, saw_coeff = false;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        const std::string val = line.substr(eq + 1);
        if (key == "delta") {
            k.delta = std::strtod(val.c_str(), nullptr);
            saw_delta = true;
        } else if (key == "M") {
            k.degree = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
            saw_m = true;
        } else if (key == "rho") {
            k.rho = std::strtod(val.c_str(), nullptr);
        } else if (key == "coefficients") {
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ','))
                k.coefficients.push_back(std::strtod(tok.c_str(), nullptr));
            saw_coeff = true;
        }
    }
    if (!saw_delta || !saw_m || !saw_coeff)
        throw std::runtime_error("kernel file " + path + " is missing delta/M/coefficients");
    validate(k);
    return k;
}

void write_dispersion_csv(const std::string& path, const DispersionCurve& c,
                          const std::string& config_id) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (!config_id.empty()) f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "k,omega,vg\n";
    for (const auto& s : c.samples)
        f << g17(s.k) << ',' << g17(s.omega) << ',' << g17(s.vg) << '\n';
    f << "# band_stop=" << (c.band_stop ? g17(*c.band_stop) : std::string("none")) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace nlwave
