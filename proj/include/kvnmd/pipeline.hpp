#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kvnmd/amp_estimation.hpp"
#include "kvnmd/classical_ref.hpp"
#include "kvnmd/correlation.hpp"
#include "kvnmd/greenkubo.hpp"
#include "kvnmd/io.hpp"
#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/potential.hpp"
#include "kvnmd/resource_model.hpp"
#include "kvnmd/stability.hpp"

namespace kvnmd {

// Experiment drivers shared by the command-line front end and the test
// suite.  Every driver optionally writes its data artifacts (CSV plus JSON
// sidecars and a metadata record) into an output directory; with no output
// directory set it only computes and returns results.  Identical parameters
// and seeds give byte-identical data files.

// -- transport readout ------------------------------------------------------

struct GkParams {
    Ensemble ensemble = Ensemble::NVE;
    int n_particles = 1;                 // 1 or 2; 2 selects the coupled cell
    int n_q = 32, n_p = 32, n_xi = 16;   // per axis; n_xi used only for NVT
    double v0 = 1.0, mass = 1.0;
    double eps = 1.2;                    // tilt of the coupled cell (2 particles)
    double t0 = 1.0, q_mass = 1.0;
    int n_f = 0;                         // 0: one per momentum axis
    double n_sigma_p = 6.0, n_sigma_xi = 6.0;
    double dt = 0.02;
    int n_steps = 2048, record_stride = 1;
    int flux_dof = 0;                    // which velocity component is the flux
    std::vector<int> m_ancs{9, 10, 11};  // empty: correlation only
    long long budget = 1LL << 28;        // grid amplitude guard
    std::uint64_t seed = 1;
    int md_traj = 0;                     // 0: skip the trajectory cross-check
    int md_steps = 0;                    // 0: match n_steps
    bool md_multi_origin = true;
    double plateau_lo = 100.0, plateau_hi = 400.0;
    std::string out;
};

struct GkResult {
    CorrelationSeries kvn;
    std::vector<BartlettReadout> readouts;
    RichardsonFit fit;          // valid when >= 2 readouts
    CorrelationSeries md;       // empty when the cross-check is off
    WindowStats md_plateau;
};

// Grid, potential, and equilibrium state for the periodic benchmark cell
// (one particle, or two with a difference coupling), shared by several
// drivers.  Throws budget_error above `budget` amplitudes.
PhaseGrid benchmark_grid(const GkParams& p);
PotentialModel benchmark_model(const GkParams& p);
KvnState equilibrium_state(const PhaseGrid& grid, const PotentialModel& model,
                           const GkParams& p);

GkResult run_gk(const GkParams& p);

// -- phase-register readout vs spectral reference ---------------------------

struct QpeParams {
    int n_q = 8, n_p = 8;
    int m_anc = 4;
    double v0 = 1.0, mass = 1.0, t0 = 1.0;
    double n_sigma_p = 6.0;
    double dt = 0.05;
    long long budget = 1LL << 28;
    std::string out;
};

struct QpeResult {
    std::vector<double> bins;       // simulated register marginals
    std::vector<double> reference;  // spectral-kernel prediction
    double max_abs_diff = 0.0;
};

QpeResult run_qpe(const QpeParams& p);

// -- amplitude-estimation scaling -------------------------------------------

struct MlaeParams {
    double amplitude = 0.25;
    int min_stages = 2, max_stages = 10;
    long long shots = 30;
    int n_rep = 200;
    int slope_stages = 4;  // late points entering the scaling fit
    std::vector<long long> naive_shots{1000, 10000, 100000, 1000000};
    std::uint64_t seed = 7;
    std::string out;
};

struct MlaeScalingResult {
    std::vector<RmseSample> mlae;
    std::vector<RmseSample> naive;
    double mlae_slope = 0.0;  // d log rmse / d log queries over the late points
    double naive_slope = 0.0;
};

MlaeScalingResult run_mlae_scaling(const MlaeParams& p);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<std::pair<double, double>>& points);

// -- gate-cost tables -------------------------------------------------------

struct ResourceParams {
    std::vector<int> n_totals{6, 8, 10, 12, 14, 16, 18, 20};
    std::vector<int> n_ps{2, 3, 4, 5, 6, 7, 8};
    int n_xi = 4;
    int n_dof = 1;
    double qsd_c1 = 1.0;
    bool qsp = false;
    int qsp_np = 10, qsp_nxi = 4;
    double qsp_eps = 1e-6, qsp_dt = 0.01;
    std::string out;
};

struct ResourceRow {
    int n = 0;            // register size the model is evaluated at
    std::string model;    // nve | h3_pauli | nvt_fit | qsd | qsp
    double cx = 0.0;
};

struct ResourceResult {
    std::vector<ResourceRow> rows;
    bool has_qsp = false;
    QspCost qsp;
};

ResourceResult run_resources(const ResourceParams& p);

// -- long-time stability ----------------------------------------------------

struct StabilityParams {
    double v0 = 1.0, mass = 1.0, t0 = 1.0, q_mass = 1.0;
    int n_f = 1;
    std::vector<StabilityCase> cases;
    std::string out;
};

// Desk-size default matrix: window scans (3..5 sigma crossed with several
// steps), resolution scans at the smallest step, and a wide-window run that
// probes the truncation floor.
std::vector<StabilityCase> default_stability_cases(double t_sim);

std::vector<StabilityRow> run_stability(const StabilityParams& p);

// -- smoke validation -------------------------------------------------------

struct ValidateCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<ValidateCheck> run_validate();

// -- configuration front door -----------------------------------------------

// Dispatch on cfg["experiment"] in {vacf, gk, qpe, mlae, resources,
// stability, validate}; unknown keys are rejected.  Writes artifacts into
// cfg["out"] when set.  Returns the process exit code (0, or 1 when a
// validate run fails a check).
int run_experiment(const Config& cfg);

}  // namespace kvnmd
