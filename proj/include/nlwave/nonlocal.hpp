#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlwave/field_series.hpp"
#include "nlwave/kernel.hpp"

namespace nlwave::nonlocal {

/// Uniform grid spanning [-(b+layer), b+layer]: interior points strictly
/// inside (-b, b), plus an inclusive boundary layer of the kernel's horizon
/// width on both sides where the solution is prescribed.
struct UniformGrid {
    double b = 0.0;
    double h = 0.0;
    double layer_width = 0.0;
    std::vector<double> x;
    std::size_t interior_lo = 0;  // first interior index
    std::size_t interior_hi = 0;  // last interior index (inclusive)

    std::size_t size() const { return x.size(); }
    std::size_t interior_count() const { return interior_hi - interior_lo + 1; }
};

UniformGrid make_grid(double b, double h, double layer_width);

/// Values imposed on the boundary layer at every step: identically zero, a
/// recorded series sampled at the grid's layer points, or a function of (x,t).
struct BoundarySource {
    enum class Kind { Zero, Series, Function } kind = Kind::Zero;
    std::shared_ptr<const FieldSeries> series;  // positions must cover the layer points
    std::function<double(double, double)> fn;

    static BoundarySource zero() { return {}; }
    static BoundarySource from_series(std::shared_ptr<const FieldSeries> s);
    static BoundarySource from_function(std::function<double(double, double)> f);
};

struct SimState {
    std::vector<double> u_prev;
    std::vector<double> u_curr;
    long n = 0;  // u_curr is the solution at time n*dt
    double dt = 0.0;
};

using SourceColumns = std::vector<std::pair<std::size_t, std::size_t>>;  // (grid idx, series col)

/// Maps every layer point of the grid onto a series column; errors out when
/// the series does not cover the layer.
SourceColumns map_layer_columns(const UniformGrid& g, const FieldSeries& s);

void fill_layer(std::vector<double>& u, const UniformGrid& g, const BoundarySource& src,
                const SourceColumns& cols, long step, double t);

/// Shared interior update used by the solver and the training loop:
/// u_next = 2 u_cur - u_prev + dt^2 (L_h u_cur + f); returns max |u_next|.
double advance_interior(const double* u_prev, const double* u_cur, double* u_next,
                        const OperatorStencil& st, std::size_t i_lo, std::size_t i_hi,
                        const double* f_row, double dt);

/// Second-order Taylor start: u^1 = u^0 + dt v0 + dt^2/2 (L_h u^0 + f(.,0)).
SimState bootstrap(const UniformGrid& g, const OperatorStencil& st,
                   const std::vector<double>& u0, const std::vector<double>& v0,
                   const std::function<double(double, double)>& f, const BoundarySource& src,
                   double dt);

/// Advances one step and refills the layer from the source at t^{n+1}.
void step(SimState& st, const UniformGrid& g, const OperatorStencil& op,
          const std::function<double(double, double)>& f, const BoundarySource& src);

struct RunOptions {
    std::size_t record_stride = 1;      // used when record_times is empty
    std::vector<double> record_times;   // recorded at the nearest step
    bool check_stability = false;       // warn when dt*omega_max > 2
    std::vector<std::string>* warnings = nullptr;
};

struct InitialData {
    std::function<double(double)> u0;  // empty = zero
    std::function<double(double)> v0;  // empty = zero
};

/// Full time integration; the returned series holds interior u and the
/// centered-in-time velocity (one-sided at the ends of the run).
FieldSeries run(const UniformGrid& g, const KernelModel& kernel, const InitialData& ic,
                const std::function<double(double, double)>& f, const BoundarySource& src,
                double T, double dt, const RunOptions& opts = {});

/// v^n = (u^{n+1} - u^{n-1}) / (2 dt) on interior snapshots, one-sided at the
/// first and last snapshot.
FieldSeries velocity_series(const FieldSeries& u_series);

}  // namespace nlwave::nonlocal
