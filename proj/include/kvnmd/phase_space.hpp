#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kvnmd {

using Complex = std::complex<double>;

// One binary-encoded phase-space axis. Grid points follow the half-open
// convention value(j) = lo + j*delta with delta = (hi - lo)/n and no endpoint
// duplication; position axes are periodic, momentum and thermostat axes are
// finite truncations treated cyclically by the transforms.
struct AxisSpec {
    std::string label;   // "q1", "q2", ..., "p1", ..., "xi"
    bool periodic = false;
    int n_qubits = 0;    // 0 marks a classical-only axis with non-binary n
    int n = 0;
    double lo = 0.0;
    double hi = 0.0;

    double delta() const { return (hi - lo) / n; }
    double value(int j) const { return lo + j * delta(); }

    static AxisSpec binary(std::string label, bool periodic, int n_qubits, double lo, double hi);
    // Arbitrary point count, for classical cross-checks on sizes that are not
    // powers of two. n_qubits stays 0.
    static AxisSpec sized(std::string label, bool periodic, int n, double lo, double hi);

    bool operator==(const AxisSpec&) const = default;
};

// Ordered axis collection; the flat amplitude index is row-major with the
// first axis slowest.
class PhaseGrid {
public:
    PhaseGrid() = default;
    explicit PhaseGrid(std::vector<AxisSpec> axes);

    int rank() const { return static_cast<int>(axes_.size()); }
    const AxisSpec& axis(int i) const { return axes_.at(i); }
    const std::vector<AxisSpec>& axes() const { return axes_; }
    Eigen::Index total_dim() const { return total_; }
    Eigen::Index stride(int i) const { return strides_.at(i); }

    // Index of the axis with the given label; throws std::invalid_argument if
    // absent.
    int axis_index(const std::string& label) const;
    bool has_axis(const std::string& label) const;

    std::vector<int> q_axes() const;  // ascending particle order
    std::vector<int> p_axes() const;
    int xi_axis() const;              // -1 when absent

    // Digit of the flat index along one axis.
    int digit(Eigen::Index flat, int ax) const {
        return static_cast<int>((flat / strides_[ax]) % axes_[ax].n);
    }

    bool operator==(const PhaseGrid&) const = default;

private:
    std::vector<AxisSpec> axes_;
    std::vector<Eigen::Index> strides_;
    Eigen::Index total_ = 1;
};

// Dense state vector over a grid. Unit norm is maintained by every propagation
// step; construction normalizes.
struct KvnState {
    PhaseGrid grid;
    Eigen::VectorXcd amp;

    double norm() const { return amp.norm(); }
};

// Real-valued function sampled on a grid (an observable or density).
struct GridFunction {
    PhaseGrid grid;
    Eigen::VectorXd values;
};

// Cyclic DFT wavenumbers of one axis in transform output order:
// k[j] = 2*pi*f_j/(n*delta) with f_j = j for j < n/2 and j - n for j >= n/2.
Eigen::VectorXd wavenumbers(const AxisSpec& axis);

// Grid values of one axis as a vector.
Eigen::VectorXd axis_values(const AxisSpec& axis);

// Tabulates f(coords) over the full grid (coords ordered like the axes).
GridFunction tabulate(const PhaseGrid& grid,
                      const std::function<double(const std::vector<double>&)>& f);

struct PotentialModel;  // potential.hpp

// Canonical (or thermostat-extended, when the grid has a xi axis) equilibrium
// profile: amplitudes proportional to exp(-beta*H_cl/2) times the thermostat
// factor exp(-beta*Q*xi^2/4). The Boltzmann exponent is shifted by its grid
// minimum before exponentiation so deep potentials cannot underflow to an
// all-zero vector; grid weights are absorbed by the final normalization.
KvnState encode_canonical(const PhaseGrid& grid, const PotentialModel& model, double beta,
                          double thermostat_mass = 1.0);

// <A> = sum_j A_j |amp_j|^2. Grids must match.
double expectation(const KvnState& state, const GridFunction& obs);

// Expectation of a function of a single axis coordinate (streaming; no full
// grid tabulation).
double expectation_axis(const KvnState& state, int ax, const std::function<double(double)>& f);

// Marginal probability distribution over the named axes (ascending order of
// the kept axes in the result), summing |amp|^2 over all other axes.
GridFunction reduced_distribution(const KvnState& state, const std::vector<std::string>& keep);

// Multiply amplitudes pointwise by a function of one axis coordinate (used for
// flux operators and observables that live on a single axis).
void scale_by_axis_function(KvnState& state, int ax, const std::function<double(double)>& f);

// -- serialization ----------------------------------------------------------
//
// Binary snapshot layout (little endian):
//   magic "KVNS"    4 bytes
//   version         u32 (= 1)
//   n_axes          u32
//   per axis: label length u32, label bytes, periodic u8, n_qubits i32,
//             n i32, lo f64, hi f64
//   body: total_dim interleaved (re f64, im f64) pairs, first axis slowest.
void save_state(const std::string& path, const KvnState& state);
KvnState load_state(const std::string& path);

// CSV dump (index digits, re, im); intended for small grids.
void save_state_csv(const std::string& path, const KvnState& state);

}  // namespace kvnmd
