#pragma once

#include <vector>

#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/potential.hpp"

namespace kvnmd {

// One long-propagation stability case: a thermostatted single-particle grid
// whose momentum and thermostat windows span n_sigma thermal widths.
struct StabilityCase {
    int n_q = 32;
    int n_p = 32;
    int n_xi = 16;
    double n_sigma_p = 4.0;
    double n_sigma_xi = 4.0;
    double dt = 0.01;
    double t_sim = 60.0;
    int record_stride = 10;
    // Value reported as the scanned parameter in summary tables; zero means
    // "use n_sigma_p".
    double scan_param = 0.0;
};

// Diagnostics of one case.  The canonical profile is stationary under the
// exact flow, so drifts of the kinetic temperature and decay of the overlap
// with the initial state measure discretization and window-truncation error.
struct StabilityRow {
    StabilityCase scan;
    double max_temp_drift = 0.0;    // max_t |T_kin(t) - t0| / t0
    double final_temp_drift = 0.0;  // same at t = t_sim
    double final_overlap = 0.0;     // |<psi_0|psi_T>|^2
    double norm_error = 0.0;        // | ||psi_T|| - 1 |
};

// Gaussian weight beyond an n-sigma window edge, exp(-n^2/2): the scale of
// the best observable accuracy a truncated window can support.
double tail_fraction(double n_sigma);

// Propagate one case and collect its diagnostics.  The position window is
// one potential period [-pi, pi); momentum and thermostat windows are set
// from the temperature and thermostat mass in cfg.  cfg.dt and the ensemble
// are taken from the case/NVT respectively.
StabilityRow run_stability_case(const PotentialModel& model, const StepConfig& cfg,
                                const StabilityCase& sc);

// Serial loop over cases (each case parallelizes internally).
std::vector<StabilityRow> run_scan(const PotentialModel& model, const StepConfig& cfg,
                                   const std::vector<StabilityCase>& cases);

}  // namespace kvnmd
