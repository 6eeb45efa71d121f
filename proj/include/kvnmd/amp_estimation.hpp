#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/potential.hpp"

namespace kvnmd {

// Success probability after k amplification rounds at angle theta.
double p_k(double theta, long long k);

// Invert one fixed-k experiment under the no-wrap assumption
// (2k+1) theta < pi/2.  Returns the amplitude estimate sin^2(theta_hat).
double fixed_k_estimate(long long k, long long shots, long long hits);

struct MlaeResult {
    double theta = 0.0;
    double amplitude = 0.0;
    double log_likelihood = 0.0;
};

// Joint maximum-likelihood estimate over several amplification depths.
// The likelihood is scanned on a dense grid over (0, pi/2) and polished by
// golden-section search; exact ties resolve to the smallest angle.
MlaeResult mlae_estimate(const std::vector<long long>& ks, const std::vector<long long>& shots,
                         const std::vector<long long>& hits);

// Exponentially increasing depth schedule: k = 0 for the first stage, then
// 2^(l-2) for stage l = 2..n_stages, each with the same shot count.
struct AmpSchedule {
    std::vector<long long> ks;
    std::vector<long long> shots;

    long long n_queries() const;  // sum over stages of shots * (2k + 1)
};

AmpSchedule eis_schedule(int n_stages, long long shots_per_stage);

// Monte-Carlo root-mean-square error of an estimator at a known amplitude,
// with the per-repetition hit counts drawn binomially.  Repetitions use
// independent rng streams and a fixed reduction order, so results do not
// depend on the worker count.
struct RmseSample {
    long long n_queries = 0;
    double rmse = 0.0;
};

RmseSample mlae_rmse(double a_true, const AmpSchedule& schedule, int n_rep, std::uint64_t seed);
RmseSample naive_rmse(double a_true, long long shots, int n_rep, std::uint64_t seed);
RmseSample fixed_k_rmse(double a_true, long long k, long long shots, int n_rep,
                        std::uint64_t seed);

// State-vector amplification oracle: `a` prepares from |0>, `a_dag` undoes
// it, `good` marks the measured-success basis states.
struct GroverOracle {
    Eigen::Index dim = 0;
    std::function<void(Eigen::VectorXcd&)> a;
    std::function<void(Eigen::VectorXcd&)> a_dag;
    std::function<bool(Eigen::Index)> good;
};

// A|0>.
Eigen::VectorXcd grover_prepare(const GroverOracle& oracle);

// One amplification round Q = -A S0 Adag Schi, where S0 reflects about |0>
// and Schi flips the sign of the good subspace.
void grover_iterate(Eigen::VectorXcd& v, const GroverOracle& oracle);

double good_probability(const Eigen::VectorXcd& v, const GroverOracle& oracle);

// Two-dimensional rotation oracle with success amplitude sin^2(theta).
GroverOracle rotation_oracle(double theta);

// Phase-readout oracle over the joint (register x system) space: the good
// subspace is the zero bin, so the success amplitude is the zero-bin weight
// the transport readout uses.  Reverse propagation runs the step with -dt,
// which inverts the palindromic stride exactly.  Throws budget_error when
// the joint space exceeds 2^22 amplitudes.
GroverOracle qpe_oracle(const KvnState& excited, const PotentialModel& model,
                        const StepConfig& cfg, int m_anc);

}  // namespace kvnmd
