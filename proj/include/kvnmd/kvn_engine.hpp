#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "kvnmd/phase_space.hpp"
#include "kvnmd/potential.hpp"

namespace kvnmd {

enum class Ensemble { NVE, NVT };

// Propagation parameters. beta = 1/t0 with k_B = 1.
struct StepConfig {
    double dt = 0.02;
    Ensemble ensemble = Ensemble::NVE;
    double t0 = 1.0;       // target temperature
    double q_mass = 1.0;   // thermostat inertia Q
    int n_f = 1;           // thermostatted dofs
};

// Current-containing dilation generator on one momentum axis, discretized as a
// cyclic antisymmetric difference:
//   D = -i * sum_j g_j (|j><j+1| - |j+1><j|),  g_j = (p_j + p_{j+1}) / (4 dp)
// with indices mod n (the last bond wraps to p_0). The ket order is chosen so
// that exp(+i a D) contracts the momentum profile toward the origin for a > 0,
// i.e. a positive friction coordinate damps. D is Hermitian; its spectral
// factorization is computed once and reused to exponentiate every thermostat
// slice exactly.
struct DilationBlock {
    Eigen::VectorXd gamma;        // n bond coefficients (last one wraps)
    Eigen::MatrixXcd vectors;     // unitary eigenvector matrix V
    Eigen::VectorXd values;       // real eigenvalues

    Eigen::MatrixXcd matrix() const;  // dense Hermitian D

    static DilationBlock build(const AxisSpec& p_axis);
};

// One split-operator stride: drift (position update), kick (momentum update),
// thermostat dilation and thermostat advection, each unitary. Phase tables and
// dilation exponentials are cached per (grid, model, config) in a StepPlan;
// the free functions below build what they need on the fly.
class StepPlan {
public:
    StepPlan(const PhaseGrid& grid, const PotentialModel& model, const StepConfig& cfg);

    const PhaseGrid& grid() const { return grid_; }
    const StepConfig& config() const { return cfg_; }
    const PotentialModel& model() const { return model_; }

    // Symmetric second-order stride over dt (sign determined by cfg.dt's sign
    // at plan construction). NVE: drift/2, kick, drift/2. NVT: drift/2,
    // kick/2, dilation/2, advection, dilation/2, kick/2, drift/2.
    void step(KvnState& state) const;

    // Individual blocks (partial time dt_part chosen at plan build).
    void drift(KvnState& state) const;       // over dt/2
    void kick_full(KvnState& state) const;   // over dt (NVE placement)
    void kick_half(KvnState& state) const;
    void dilation_half(KvnState& state) const;
    void advection_full(KvnState& state) const;

private:
    struct Table {  // diagonal phase over a subset of axes
        std::vector<int> axes;
        std::vector<Eigen::Index> dims;
        Eigen::VectorXcd phase;
    };

    void apply_table(KvnState& state, const Table& t) const;
    void apply_dilation_matrices(KvnState& state, int dof,
                                 const std::vector<Eigen::MatrixXcd>& w) const;

    Table drift_pair_table(int dof, double dt_part) const;
    Table kick_table(int dof, double dt_part) const;
    Table advection_table(double dt_part) const;
    std::vector<Eigen::MatrixXcd> dilation_matrices(int dof, double dt_part) const;

    PhaseGrid grid_;
    PotentialModel model_;
    StepConfig cfg_;
    std::vector<int> q_axes_, p_axes_;
    int xi_axis_ = -1;

    std::vector<Table> drift_tables_;        // one per dof, at dt/2
    std::vector<Table> kick_tables_full_;    // one per dof, at dt
    std::vector<Table> kick_tables_half_;    // one per dof, at dt/2
    Table advection_table_full_;             // at dt
    // Per dof, per xi grid index: exp(+i*(dt/2)*xi_j*D_p).
    std::vector<std::vector<Eigen::MatrixXcd>> dilation_half_;
    // Per dof: momentum-fiber base addresses grouped by xi index.
    std::vector<std::vector<std::vector<Eigen::Index>>> dilation_cols_;
};

// -- free-function forms (convenience wrappers around a throwaway plan) ------

// exp(-i dt sum_i (p_i/m_i) lambda_{q_i}) applied over dt = cfg.dt/2.
void apply_drift_half(KvnState& state, const PotentialModel& model, const StepConfig& cfg);

// exp(-i dt sum_i F_i(q) lambda_{p_i}) over dt = cfg.dt.
void apply_kick(KvnState& state, const PotentialModel& model, const StepConfig& cfg);

// exp(+i dt xi (x) sum_i D_{p_i}) over dt, applied exactly per xi slice.
void apply_dilation(KvnState& state, const PotentialModel& model, const StepConfig& cfg,
                    double dt);

// exp(-i dt ((sum_i p_i^2/m_i - n_f t0)/Q) lambda_xi) over dt.
void apply_thermostat_advection(KvnState& state, const PotentialModel& model,
                                const StepConfig& cfg, double dt);

// One full symmetric stride (builds a plan; prefer StepPlan for loops).
void step(KvnState& state, const PotentialModel& model, const StepConfig& cfg);

// Kinetic temperature (1/n_f) sum_i <p_i^2/m_i>.
double kinetic_temperature(const KvnState& state, const PotentialModel& model, int n_f);

// -- dense oracles (see dense_oracle.cpp) ------------------------------------

// Dense Hermitian generator assembled from DFT-based derivative operators and
// the cyclic-difference dilation; refuses grids above 4096 amplitudes.
Eigen::MatrixXcd assemble_dense_generator(const PhaseGrid& grid, const PotentialModel& model,
                                          const StepConfig& cfg);

// Dense unitary of one split-operator stride, column by column.
Eigen::MatrixXcd dense_step_matrix(const PhaseGrid& grid, const PotentialModel& model,
                                   const StepConfig& cfg);

// Derivative operator F^dag diag(k) F on one axis, embedded in the full space.
Eigen::MatrixXcd dense_lambda(const PhaseGrid& grid, int ax);

// Cyclic-difference dilation on one momentum axis, embedded in the full space.
Eigen::MatrixXcd dense_dilation(const PhaseGrid& grid, int ax);

// Diagonal operator from a tabulated grid function.
Eigen::MatrixXcd dense_diagonal(const GridFunction& f);

}  // namespace kvnmd
