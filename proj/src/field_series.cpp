#include "nlwave/field_series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlwave {

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<double> uniform_positions(double x0, double x1, double h) {
    if (h <= 0 || x1 <= x0) throw std::invalid_argument("uniform_positions: bad range");
    const double n_real = (x1 - x0) / h;
    const auto n = static_cast<std::size_t>(std::llround(n_real));
    if (std::abs(n_real - static_cast<double>(n)) > 1e-9 * std::max(1.0, n_real))
        throw std::invalid_argument("uniform_positions: (x1-x0)/h is not an integer");
    std::vector<double> xs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) xs[i] = x0 + static_cast<double>(i) * h;
    xs[n] = x1;
    return xs;
}

InterpCoeff interp_coeff(const std::vector<double>& nodes, double x) {
    if (nodes.size() < 2) throw std::invalid_argument("interp_coeff: need at least two nodes");
    const double tol = 1e-12 * std::max(1.0, std::abs(x));
    if (x < nodes.front() - tol || x > nodes.back() + tol)
        throw std::out_of_range("interpolation request outside sampled range: x=" + g17(x));
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t i = (it == nodes.begin()) ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    if (i >= nodes.size() - 1) i = nodes.size() - 2;
    const double w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return {i, std::clamp(w, 0.0, 1.0)};
}

FieldSeries resample(const FieldSeries& s, const std::vector<double>& target_positions,
                     const std::vector<double>& target_times) {
    FieldSeries out;
    out.positions = target_positions;
    out.times = target_times;
    out.dt = s.dt;
    out.half_width = s.half_width;
    out.uniform = true;
    if (target_positions.size() >= 2) out.h = target_positions[1] - target_positions[0];

    std::vector<std::size_t> time_index(target_times.size());
    for (std::size_t n = 0; n < target_times.size(); ++n) {
        const double t = target_times[n];
        auto it = std::lower_bound(s.times.begin(), s.times.end(), t - 1e-9);
        if (it == s.times.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw std::invalid_argument("resample: time " + g17(t) + " was not sampled");
        time_index[n] = static_cast<std::size_t>(it - s.times.begin());
    }
    std::vector<InterpCoeff> cs(target_positions.size());
    for (std::size_t i = 0; i < target_positions.size(); ++i)
        cs[i] = interp_coeff(s.positions, target_positions[i]);

    const std::size_t nx = target_positions.size();
    out.u.resize(target_times.size() * nx);
    out.v.resize(target_times.size() * nx);
    for (std::size_t n = 0; n < target_times.size(); ++n) {
        const double* su = s.u_row(time_index[n]);
        const double* sv = s.v_row(time_index[n]);
        for (std::size_t i = 0; i < nx; ++i) {
            const auto& c = cs[i];
            out.u[n * nx + i] = (1.0 - c.w) * su[c.i] + c.w * su[c.i + 1];
            out.v[n * nx + i] = (1.0 - c.w) * sv[c.i] + c.w * sv[c.i + 1];
        }
    }
    return out;
}

FieldSeries resample(const FieldSeries& s, const std::vector<double>& target_positions,
                     double target_dt) {
    if (s.times.size() < 2) throw std::invalid_argument("resample: series has fewer than two snapshots");
    const double src_dt = s.times[1] - s.times[0];
    const double ratio = target_dt / src_dt;
    const auto k = static_cast<std::size_t>(std::llround(ratio));
    if (k == 0 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
        throw std::invalid_argument("resample: target_dt is not an integer multiple of the sampling interval");
    std::vector<double> ts;
    for (std::size_t n = 0; n < s.times.size(); n += k) ts.push_back(s.times[n]);
    return resample(s, target_positions, ts);
}

void write_field_csv(const std::string& path, const FieldSeries& s, const std::string& config_id) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    if (!config_id.empty()) f << "# config=" << config_id << "\n";
    f << "# quadrature=uniform-endpoint\n";
    f << "# b=" << g17(s.half_width) << "\n";
    f << "# dt=" << g17(s.dt) << "\n";
    f << "# grid=" << (s.uniform ? "uniform" : "nonuniform") << "\n";
    if (s.uniform) f << "# h=" << g17(s.h) << "\n";
    if (!s.kernel_path.empty()) f << "# kernel=" << s.kernel_path << "\n";
    f << "t,x,u,v\n";
    const std::size_t nx = s.nx();
    for (std::size_t n = 0; n < s.nt(); ++n) {
        const std::string ts = g17(s.times[n]);
        for (std::size_t i = 0; i < nx; ++i) {
            f << ts << ',' << g17(s.positions[i]) << ',' << g17(s.u[n * nx + i]) << ','
              << g17(s.v[n * nx + i]) << '\n';
        }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

FieldSeries read_field_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    FieldSeries s;
    std::string line;
    std::vector<double> ts, xs, us, vs;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            const std::string val = line.substr(eq + 1);
            if (key == "b") s.half_width = std::strtod(val.c_str(), nullptr);
            else if (key == "dt") s.dt = std::strtod(val.c_str(), nullptr);
            else if (key == "grid") s.uniform = (val == "uniform");
            else if (key == "h") s.h = std::strtod(val.c_str(), nullptr);
            else if (key == "kernel") s.kernel_path = val;
            continue;
        }
        if (!header_seen) {  // column header row
            header_seen = true;
            continue;
        }
        const char* p = line.c_str();
        char* end = nullptr;
        double row[4];
        for (int c = 0; c < 4; ++c) {
            row[c] = std::strtod(p, &end);
            if (end == p) throw std::runtime_error("malformed row in " + path + ": " + line);
            p = (*end == ',') ? end + 1 : end;
        }
        ts.push_back(row[0]);
        xs.push_back(row[1]);
        us.push_back(row[2]);
        vs.push_back(row[3]);
    }
    if (ts.empty()) throw std::runtime_error("no data rows in " + path);

    // Rows are written t-major with a fixed position set per snapshot.
    std::size_t nx = 1;
    while (nx < ts.size() && ts[nx] == ts[0]) ++nx;
    if (ts.size() % nx != 0) throw std::runtime_error("ragged series in " + path);
    const std::size_t nt = ts.size() / nx;
    s.positions.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(nx));
    s.times.resize(nt);
    for (std::size_t n = 0; n < nt; ++n) s.times[n] = ts[n * nx];
    s.u = std::move(us);
    s.v = std::move(vs);
    return s;
}

}  // namespace nlwave
