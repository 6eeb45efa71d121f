#pragma once

#include <vector>

#include "kvnmd/correlation.hpp"
#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/potential.hpp"
#include "kvnmd/rng.hpp"

namespace kvnmd {

// Point trajectory state for the reference integrators.
struct MdState {
    std::vector<double> q;
    std::vector<double> p;
    double xi = 0.0;
    double t = 0.0;
};

// One velocity-Verlet step (microcanonical).
void verlet_step(MdState& s, const PotentialModel& model, double dt);

// One time-reversible thermostatted step.  Outer thermostat stages bracket an
// inner velocity-Verlet kernel:
//   A(dt/4) B(dt/2) A(dt/4)  V(dt)  A(dt/4) B(dt/2) A(dt/4)
// where A advances xi from the instantaneous kinetic imbalance and B rescales
// momenta by exp(-xi dt/2).  Running it with dt of both signs composes to the
// identity up to roundoff.
void nose_hoover_step(MdState& s, const PotentialModel& model, const StepConfig& cfg, double dt);

// Draw one canonical sample by inertial Langevin dynamics (BAOAB splitting,
// unit friction), starting from q = 0 with thermal momenta and discarding
// `burn_in` steps of size `dt`.  For thermostatted ensembles xi is drawn from
// its Gaussian marginal.  Distinct rng streams give independent samples.
MdState thermal_sample(const PotentialModel& model, const StepConfig& cfg, CounterRng& rng,
                       int burn_in = 10000, double dt = 0.01);

struct VacfMdParams {
    int n_traj = 1000;
    int n_steps = 2000;        // production steps per trajectory
    int record_stride = 1;     // steps between recorded samples
    int max_lag = 0;           // reported lags in recorded units; 0 keeps all
    double dt = 0.02;
    std::uint64_t seed = 1;
    int flux_dof = 0;          // which velocity component is correlated
    bool multi_origin = false; // average over every time origin per trajectory
};

// Trajectory-averaged velocity autocorrelation of one velocity component
// p_dof / m_dof.  Initial conditions are canonical; propagation follows
// cfg.ensemble.  With multi_origin the per-trajectory estimate averages
// v(o) v(o+s) over all recorded origins o (computed by FFT), which cuts the
// long-lag noise by orders of magnitude relative to the origin-zero
// estimator.  Trajectories use independent, order-independent rng streams
// and are accumulated in a fixed order, so results are run-to-run identical.
CorrelationSeries vacf_md(const PotentialModel& model, const StepConfig& cfg,
                          const VacfMdParams& params);

}  // namespace kvnmd
