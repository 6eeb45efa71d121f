#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "kvnmd/resource_model.hpp"

namespace kvnmd {

namespace {

bool is_pow2_ll(long long n) { return n > 0 && (n & (n - 1)) == 0; }

// |J_k(x)| for k = 0..k_max by downward recurrence with normalization
// J_0 + 2 sum_{even k} J_k = 1; stable where upward recurrence is not.
std::vector<double> bessel_j_table(double x, int k_max) {
    if (x <= 0.0) throw std::invalid_argument("bessel_j_table: positive argument required");
    const int start = k_max + std::max(40, static_cast<int>(std::ceil(2.0 * std::sqrt(x) + x)));
    std::vector<double> j(start + 2, 0.0);
    j[start + 1] = 0.0;
    j[start] = 1e-30;
    for (int k = start; k >= 1; --k) {
        j[k - 1] = (2.0 * k / x) * j[k] - j[k + 1];
        if (std::abs(j[k - 1]) > 1e250) {
            for (int i = k - 1; i <= start + 1; ++i) j[i] *= 1e-250;
        }
    }
    double norm = j[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0 * j[k];
    j.resize(k_max + 1);
    for (double& v : j) v /= norm;
    return j;
}

}  // namespace

int PauliTerm::weight() const { return std::popcount(x_mask | z_mask); }

int PauliTerm::y_count() const { return std::popcount(x_mask & z_mask); }

long long cx_for_weight(int w) { return w >= 2 ? 2LL * (w - 1) : 0LL; }

std::vector<PauliTerm> decompose_dp(const std::vector<double>& gamma) {
    const long long n = static_cast<long long>(gamma.size());
    if (!is_pow2_ll(n) || n < 2)
        throw std::invalid_argument("decompose_dp: need a power-of-two bond profile");
    if (n > 4096) throw std::invalid_argument("decompose_dp: profile too large");

    std::map<std::uint64_t, std::vector<long long>> bonds_by_mask;
    for (long long j = 0; j < n; ++j)
        bonds_by_mask[static_cast<std::uint64_t>(j ^ ((j + 1) % n))].push_back(j);

    std::vector<PauliTerm> out;
    for (const auto& [x, bonds] : bonds_by_mask) {
        for (long long z = 0; z < n; ++z) {
            const int y = std::popcount(x & static_cast<std::uint64_t>(z));
            if (y % 2 == 0) continue;  // even-Y traces vanish identically
            // The two entries of each bond combine to
            // i^(y+1) gamma_j [(-1)^<j+1,z> - (-1)^<j,z>], real for odd y
            // (bond order fixed by the damping-direction convention of
            // DilationBlock::matrix).
            const double sign = ((y + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            double s = 0.0;
            for (long long j : bonds) {
                const int pj = std::popcount(static_cast<std::uint64_t>(j) &
                                             static_cast<std::uint64_t>(z)) &
                               1;
                const int pj1 = std::popcount(static_cast<std::uint64_t>((j + 1) % n) &
                                              static_cast<std::uint64_t>(z)) &
                                1;
                s += gamma[static_cast<std::size_t>(j)] *
                     ((pj1 ? -1.0 : 1.0) - (pj ? -1.0 : 1.0));
            }
            const double coeff = sign * s / static_cast<double>(n);
            if (std::abs(coeff) > 1e-12)
                out.push_back({x, static_cast<std::uint64_t>(z), coeff});
        }
    }
    return out;
}

std::vector<PauliTerm> decompose_dp(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 12) throw std::invalid_argument("decompose_dp: bad qubit count");
    const long long n = 1LL << n_qubits;
    std::vector<double> gamma(static_cast<std::size_t>(n));
    for (long long j = 0; j < n - 1; ++j)
        gamma[static_cast<std::size_t>(j)] = (2.0 * j + 1.0 - n) / 4.0;
    gamma[static_cast<std::size_t>(n - 1)] = -0.25;  // wrap bond of the symmetric window
    return decompose_dp(gamma);
}

long long n_dp_closed(int n_qubits) {
    if (n_qubits < 2) throw std::invalid_argument("n_dp_closed: needs at least two qubits");
    return 7LL * (1LL << n_qubits) / 4 - (n_qubits + 2);
}

long long w_dp_closed(int n_qubits) {
    if (n_qubits < 2) throw std::invalid_argument("w_dp_closed: needs at least two qubits");
    const long long p2 = 1LL << n_qubits;
    return 7LL * n_qubits * p2 / 4 - 3LL * p2 + 3;
}

std::vector<PauliTerm> xi_z_expansion(int n_qubits, double delta) {
    if (n_qubits < 1 || n_qubits > 20)
        throw std::invalid_argument("xi_z_expansion: bad qubit count");
    if (delta <= 0.0) throw std::invalid_argument("xi_z_expansion: positive spacing required");
    const long long n = 1LL << n_qubits;
    std::vector<PauliTerm> out;
    for (long long z = 0; z < n; ++z) {
        double a = 0.0;
        for (long long j = 0; j < n; ++j) {
            const double xi = delta * (static_cast<double>(j) - static_cast<double>(n) / 2.0);
            const int par = std::popcount(static_cast<std::uint64_t>(j) &
                                          static_cast<std::uint64_t>(z)) &
                            1;
            a += (par ? -xi : xi);
        }
        a /= static_cast<double>(n);
        if (std::abs(a) > 1e-12) out.push_back({0, static_cast<std::uint64_t>(z), a});
    }
    return out;
}

long long h3_pauli_cx(const std::vector<PauliTerm>& dp_terms,
                      const std::vector<PauliTerm>& xi_terms, int n_dof) {
    if (n_dof < 1) throw std::invalid_argument("h3_pauli_cx: bad dof count");
    long long cx = 0;
    for (const auto& d : dp_terms)
        for (const auto& x : xi_terms) cx += cx_for_weight(d.weight() + x.weight());
    return cx * n_dof;
}

long long h3_pauli_cx(int n_p_qubits, int n_xi_qubits, int n_dof) {
    const double delta = 8.0 / static_cast<double>(1LL << n_xi_qubits);
    return h3_pauli_cx(decompose_dp(n_p_qubits), xi_z_expansion(n_xi_qubits, delta), n_dof);
}

long long nve_cx_model(int n_qubits) {
    if (n_qubits < 3) throw std::invalid_argument("nve_cx_model: register too small");
    return 3LL * n_qubits * n_qubits + 2LL * n_qubits - 21;
}

double nvt_cx_fit(int n_p_qubits, int n_xi_qubits) {
    if (n_p_qubits < 1) throw std::invalid_argument("nvt_cx_fit: bad momentum register");
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    switch (n_xi_qubits) {
        case 2: c1 = 5.06; c2 = 11.2; c3 = 77.0; break;
        case 3: c1 = 4.96; c2 = 19.2; c3 = 69.0; break;
        case 4: c1 = 4.85; c2 = 27.2; c3 = 68.0; break;
        default:
            throw std::invalid_argument("nvt_cx_fit: fit available for 2..4 thermostat qubits");
    }
    const double p2 = static_cast<double>(1LL << n_p_qubits);
    return c1 * n_p_qubits * p2 + c2 * p2 + c3;
}

double qsd_cx_model(int n_qubits, double c1) {
    if (n_qubits < 1 || c1 <= 0.0) throw std::invalid_argument("qsd_cx_model: bad inputs");
    return c1 * std::pow(4.0, n_qubits);
}

QspCost qsp_best_case(int n_p_qubits, int n_xi_qubits, double eps, double dt) {
    if (n_p_qubits < 1 || n_xi_qubits < 1)
        throw std::invalid_argument("qsp_best_case: bad register sizes");
    if (eps <= 0.0 || eps >= 1.0 || dt <= 0.0)
        throw std::invalid_argument("qsp_best_case: bad accuracy or step");

    QspCost c;
    const double delta_xi = 8.0 / static_cast<double>(1LL << n_xi_qubits);
    const double xi_max = (static_cast<double>(1LL << n_xi_qubits) - 1.0) * delta_xi / 2.0;
    const double gamma_max = (static_cast<double>(1LL << n_p_qubits) - 1.0) / 4.0;
    c.alpha = 2.0 * xi_max * gamma_max;
    c.tau = c.alpha * dt;

    const int k_cap = 1000;
    const std::vector<double> j = bessel_j_table(c.tau, k_cap + 1);
    int k = -1;
    for (int cand = 1; cand <= k_cap; ++cand) {
        // Only trust the tail once past the turning point, where the Bessel
        // magnitudes decay monotonically instead of oscillating.
        if (cand + 1 > c.tau && std::abs(j[cand + 1]) < 0.5 * eps) {
            k = cand;
            break;
        }
    }
    if (k < 0) throw std::runtime_error("qsp_best_case: no truncation order below cap");
    c.truncation = k;

    const int n = n_p_qubits + n_xi_qubits;
    c.c_be = 10LL * n + static_cast<long long>(std::floor(n * std::log2(1.0 / eps)));
    c.total = (4LL * k + 3) * c.c_be + (2LL * k + 2) * 4LL * n;
    return c;
}

}  // namespace kvnmd
