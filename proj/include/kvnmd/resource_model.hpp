#pragma once

#include <cstdint>
#include <vector>

namespace kvnmd {

// Tensor-product Pauli operator over n qubits in symplectic form: bit b of
// x_mask / z_mask marks an X / Z factor on qubit b, both bits together a Y.
// The operator carries the phase that makes it Hermitian with real matrix
// entries on the X/Z part, and the stored coefficient is real.
struct PauliTerm {
    std::uint64_t x_mask = 0;
    std::uint64_t z_mask = 0;
    double coeff = 0.0;

    int weight() const;   // qubits acted on
    int y_count() const;  // qubits carrying a Y factor
};

// Entangling-gate count of one exponentiated Pauli string via the standard
// ladder construction: 2 (w - 1) for weight w >= 2, none below.
long long cx_for_weight(int w);

// Hermitian cyclic-difference momentum-derivative operator expanded in the
// Pauli basis.  The bond profile gamma_j multiplies |j+1><j| - |j><j+1|
// (indices modulo 2^n) with an overall -i.  The index-based overload uses
// the symmetric-window profile gamma_j = (2j + 1 - N) / 4 with wrap bond
// -1/4.  Only odd-Y strings survive; coefficients below 1e-12 are dropped.
std::vector<PauliTerm> decompose_dp(const std::vector<double>& gamma);
std::vector<PauliTerm> decompose_dp(int n_qubits);

// Closed forms for the term count and total weight of the symmetric-window
// expansion: (7/4) 2^n - (n + 2) terms of combined weight
// (7/4) n 2^n - 3 * 2^n + 3.  Valid for n >= 2.
long long n_dp_closed(int n_qubits);
long long w_dp_closed(int n_qubits);

// Diagonal thermostat-variable operator on a symmetric window of width
// delta * 2^n expanded over I/Z strings: one Z per qubit with coefficient
// -delta 2^(b-1) and an identity shift of -delta/2.  Computed by brute
// force from the grid values so asymmetric windows also work.
std::vector<PauliTerm> xi_z_expansion(int n_qubits, double delta);

// Entangling cost of the thermostat-coupling generator: every product of a
// thermostat-register string with a momentum-derivative string costs the
// ladder count at their combined weight, once per coupled degree of freedom.
long long h3_pauli_cx(const std::vector<PauliTerm>& dp_terms,
                      const std::vector<PauliTerm>& xi_terms, int n_dof);
long long h3_pauli_cx(int n_p_qubits, int n_xi_qubits, int n_dof);

// Per-step entangling-gate models for a register of n qubits.
long long nve_cx_model(int n_qubits);                 // 3n^2 + 2n - 21
double nvt_cx_fit(int n_p_qubits, int n_xi_qubits);   // fitted, n_xi in {2,3,4}
double qsd_cx_model(int n_qubits, double c1);         // c1 * 4^n

// Best-case polynomial-evolution cost of the thermostat coupling: the
// generator is block-encoded once and the time-evolution polynomial is
// truncated where the Bessel tail drops below eps / 2.
struct QspCost {
    double alpha = 0.0;      // block-encoding normalization
    double tau = 0.0;        // rescaled evolution time alpha * dt
    int truncation = 0;      // polynomial degree kept
    long long c_be = 0;      // entangling cost of one block encoding
    long long total = 0;     // full circuit entangling cost
};

QspCost qsp_best_case(int n_p_qubits, int n_xi_qubits, double eps, double dt);

}  // namespace kvnmd
