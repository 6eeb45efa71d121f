#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kvnmd/correlation.hpp"
#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/potential.hpp"

namespace kvnmd {

// Multiply the state by one velocity component p_dof / m_dof and
// renormalize.  Returns the zero-lag correlation value <v_dof^2> under
// the original density.  Throws if the excited state has (numerically)
// zero norm or the degree of freedom does not exist.
double flux_excite(KvnState& state, const PotentialModel& model, int dof = 0);

// Velocity autocorrelation from one state-vector propagation: excite the
// equilibrium state with the flux, evolve, and record overlaps with the
// frozen excited state every `record_stride` steps.
CorrelationSeries vacf_kvn(const KvnState& equilibrium, const PotentialModel& model,
                           const StepConfig& cfg, int n_steps, int record_stride = 1,
                           int flux_dof = 0);

// Zero-frequency bin weight of a phase-readout register with K applications,
// from the first K lags of the normalized correlation series:
//   P0 = (1/K^2) [ K + 2 sum_{s=1}^{K-1} (K - s) c_s ].
// Values escaping [0, 1] by more than 1e-9 indicate an inconsistent series
// and throw; smaller excursions are clamped.
double p0_bartlett(const CorrelationSeries& series, long long k_applications);

// Transport coefficient from the zero-bin weight: D = c0 * tau * p0 / 2.
double bartlett_from_p0(double c0, double tau, double p0);

// One readout at ancilla width m_anc: K = 2^m_anc applications over total
// time tau = K * series.dt.
struct BartlettReadout {
    int m_anc = 0;
    long long k = 0;
    double tau = 0.0;
    double p0 = 0.0;
    double d = 0.0;
};

BartlettReadout d_bartlett(const CorrelationSeries& series, int m_anc);

// Least-squares fit of readouts to D(K) = d_inf + a1 / K.  The intercept
// standard error comes from the fit residuals (needs >= 3 points; with
// exactly 2 the fit is exact and stderr_d is 0).
struct RichardsonFit {
    double d_inf = 0.0;
    double a1 = 0.0;
    double stderr_d = 0.0;
};

RichardsonFit richardson(const std::vector<BartlettReadout>& readouts);

// Full phase-readout register simulated on the state vector: prepares the
// uniform ancilla register, applies controlled powers of the one-step
// propagator, inverse-Fourier-transforms the register, and returns the 2^m
// ancilla bin probabilities.  Throws budget_error when the joint register
// exceeds 2^30 amplitudes.
std::vector<double> qpe_statevector(const KvnState& excited, const PotentialModel& model,
                                    const StepConfig& cfg, int m_anc);

// Reference bin probabilities from the spectral decomposition of a dense
// one-step unitary: P_l = sum_k |a_k|^2 F_K(theta_k + 2 pi l / K) where F_K
// is the squared-Dirichlet averaging kernel.  Eigenpairs come from a Schur
// factorization, whose orthonormal basis stays well-conditioned under
// degenerate eigenvalues.
std::vector<double> fejer_reference(const Eigen::MatrixXcd& step_unitary,
                                    const Eigen::VectorXcd& excited, int m_anc);

// Largest pointwise distance between two correlation functions over their
// common lag range, in units of the first function's zero-lag value:
// max_k |C_a(k) - C_ref(k)| / C_a(0).  Time grids must match.
double peak_deviation(const CorrelationSeries& a, const CorrelationSeries& ref);

// Log-log fit of error against grid size for a refinement scan.  `ok` is
// false when any error is non-positive (converged to roundoff), in which
// case no fit is attempted.
struct GridErrorFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool ok = false;
};

GridErrorFit grid_error_scan(const std::vector<std::pair<int, double>>& err_by_n);

// Qubits needed per axis so an order-gamma discretization reaches absolute
// accuracy eps over an amplitude scale a: ceil(log2(a / eps) / gamma).
int qubits_for_target(double gamma, double a, double eps);

// Propagated readout error bound: |dD| <= c0 * tau * eps_c / 2.
double dbart_error_bound(double c0, double tau, double eps_c);

}  // namespace kvnmd
