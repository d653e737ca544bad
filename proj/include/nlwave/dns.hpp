#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlwave/field_series.hpp"
#include "nlwave/material.hpp"

namespace nlwave::dns {

/// Characteristics grid: the travel time between adjacent nodes equals dt
/// exactly, so node spacing is c*dt per layer and every material interface
/// falls on a node.
struct DnsGrid {
    std::vector<double> nodes;              // x_gamma, sorted
    std::vector<double> segment_impedance;  // per inter-node segment
    std::vector<double> segment_speed;
    std::vector<double> segment_modulus;
    std::vector<double> segment_density;
    std::vector<double> inv_impedance_sum;  // per node, interior only
    double dt = 0.0;
    double half_width = 0.0;

    std::size_t node_count() const { return nodes.size(); }
};

/// Nearest domain half-width whose endpoints coincide with period boundaries.
double snap_half_width(const Microstructure& ms, double b);

/// Builds the grid for the symmetric domain (-b, b). Requires b to sit on a
/// layer interface and L/(c*dt) to be an integer for both materials; the
/// error message names the nearest admissible dt otherwise.
DnsGrid build_grid(const Microstructure& ms, double b, double dt);

struct DnsState {
    std::vector<double> v;
    std::vector<double> sigma;
    std::vector<double> u;
    long step_index = 0;

    // scratch for the double-buffered update
    std::vector<double> v_next;
    std::vector<double> sigma_next;
};

DnsState make_state(const DnsGrid& grid);

enum class EndKind { Free, Fixed, Prescribed };

struct BoundaryDrive {
    EndKind left = EndKind::Free;
    EndKind right = EndKind::Free;
    std::function<double(double)> left_velocity;  // required when left == Prescribed
};

using Forcing = std::function<double(double, double)>;  // f(x, t); empty = none

/// One step of the wave-diagram scheme: at every interior node the two
/// incoming characteristic invariants sigma -+ Z v are solved for the new
/// (v, sigma), the body force is added to v afterwards, and
/// u^{n+1} = u^n + dt v^{n+1}.
void step(DnsState& st, const DnsGrid& grid, const Forcing& f, const BoundaryDrive& drive);

struct InitialCondition {
    std::function<double(double)> v0;     // empty = zero
    std::function<double(double)> u0;     // empty = zero
    std::function<double(double)> sigma0; // empty = zero
};

class Recorder {
  public:
    virtual ~Recorder() = default;
    virtual void on_state(const DnsGrid& grid, const DnsState& st, double t) = 0;
};

/// Records (u, v) interpolated at fixed positions, either on every stride-th
/// step or at an explicit sorted list of times.
class SeriesRecorder final : public Recorder {
  public:
    SeriesRecorder(std::vector<double> positions, std::size_t stride);
    SeriesRecorder(std::vector<double> positions, std::vector<double> times);
    void on_state(const DnsGrid& grid, const DnsState& st, double t) override;
    FieldSeries take();

  private:
    std::vector<double> positions_;
    std::size_t stride_ = 1;
    std::vector<double> times_;  // explicit mode when non-empty
    std::size_t next_time_ = 0;
    std::size_t step_count_ = 0;
    std::vector<InterpCoeff> coeffs_;
    bool coeffs_ready_ = false;
    FieldSeries out_;
};

/// Tracks the centroid of v^2 over a window; used for group-velocity reads.
class CentroidRecorder final : public Recorder {
  public:
    CentroidRecorder(std::size_t stride, double window_lo, double window_hi);
    void on_state(const DnsGrid& grid, const DnsState& st, double t) override;

    struct Sample {
        double t;
        double centroid;
        double mass;  // integral of v^2 over the window
    };
    const std::vector<Sample>& samples() const { return samples_; }

  private:
    std::size_t stride_;
    double lo_, hi_;
    std::size_t step_count_ = 0;
    std::vector<Sample> samples_;
};

/// Trapezoidal field energy, with interface cells split per material side.
double total_energy(const DnsGrid& grid, const DnsState& st);

void run(const DnsGrid& grid, const BoundaryDrive& drive, const Forcing& f,
         const InitialCondition& ic, double T, const std::vector<Recorder*>& recorders);

struct PacketSpeed {
    bool ok = false;
    double vg = 0.0;
    double domain_half_width = 0.0;
    std::string diagnostic;
};

/// Drives a quasi-monochromatic packet sin(omega t) * gaussian envelope into
/// the bar and reads the speed of the centroid of v^2 between two
/// well-separated times.
PacketSpeed measure_packet_speed(const Microstructure& ms, double omega,
                                 const PacketMeasureConfig& cfg);

}  // namespace nlwave::dns
