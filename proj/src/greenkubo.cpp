#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "kvnmd/errors.hpp"
#include "kvnmd/fft.hpp"
#include "kvnmd/greenkubo.hpp"

namespace kvnmd {

namespace {

constexpr long long kJointGuard = 1LL << 30;

// Squared-Dirichlet averaging kernel (1/K^2) sin^2(Kx/2) / sin^2(x/2).
double averaging_kernel(double x, long long k) {
    const double s = std::sin(0.5 * x);
    if (std::abs(s) < 1e-15) return 1.0;
    const double num = std::sin(0.5 * static_cast<double>(k) * x);
    const double r = num / (static_cast<double>(k) * s);
    return r * r;
}

}  // namespace

double flux_excite(KvnState& state, const PotentialModel& model, int dof) {
    const PhaseGrid& g = state.grid;
    const auto ps = g.p_axes();
    if (static_cast<int>(ps.size()) != model.n_dof())
        throw std::invalid_argument("flux_excite: grid/model mismatch");
    if (dof < 0 || dof >= static_cast<int>(ps.size()))
        throw std::invalid_argument("flux_excite: no such degree of freedom");
    const double n0 = state.amp.squaredNorm();
    if (n0 <= 0.0) throw std::invalid_argument("flux_excite: zero input state");

    // The flux is one velocity component, not a sum over particles.
    const int ax = ps[static_cast<std::size_t>(dof)];
    const double inv_m = 1.0 / model.masses[static_cast<std::size_t>(dof)];
    for (Eigen::Index j = 0; j < g.total_dim(); ++j)
        state.amp[j] *= g.axis(ax).value(g.digit(j, ax)) * inv_m;

    const double c0 = state.amp.squaredNorm() / n0;
    if (c0 < 1e-300)
        throw std::runtime_error("flux_excite: flux annihilates the state");
    state.amp /= state.amp.norm();
    return c0;
}

CorrelationSeries vacf_kvn(const KvnState& equilibrium, const PotentialModel& model,
                           const StepConfig& cfg, int n_steps, int record_stride, int flux_dof) {
    if (n_steps <= 0 || record_stride <= 0)
        throw std::invalid_argument("vacf_kvn: invalid step counts");
    KvnState phi = equilibrium;
    const double c0 = flux_excite(phi, model, flux_dof);
    const Eigen::VectorXcd phi0 = phi.amp;

    StepPlan plan(phi.grid, model, cfg);
    const int n_lags = n_steps / record_stride + 1;

    CorrelationSeries out;
    out.dt = cfg.dt * record_stride;
    out.c0 = c0;
    out.overlap.resize(n_lags);
    out.c.resize(n_lags);
    out.overlap[0] = phi0.dot(phi0);
    out.c[0] = out.overlap[0].real();
    int next = 1;
    for (int step = 1; step <= n_steps; ++step) {
        plan.step(phi);
        if (step % record_stride == 0) {
            out.overlap[next] = phi0.dot(phi.amp);
            out.c[next] = out.overlap[next].real();
            ++next;
        }
    }
    return out;
}

double p0_bartlett(const CorrelationSeries& series, long long k_applications) {
    if (k_applications < 1)
        throw std::invalid_argument("p0_bartlett: need at least one application");
    if (static_cast<long long>(series.c.size()) < k_applications)
        throw std::invalid_argument("p0_bartlett: series shorter than the lag window");
    double sum = static_cast<double>(k_applications);
    for (long long s = 1; s < k_applications; ++s)
        sum += 2.0 * static_cast<double>(k_applications - s) * series.c[s];
    const double k2 = static_cast<double>(k_applications) * static_cast<double>(k_applications);
    double p0 = sum / k2;
    if (p0 < -1e-9 || p0 > 1.0 + 1e-9)
        throw std::runtime_error("p0_bartlett: bin weight escapes [0, 1]");
    return std::min(1.0, std::max(0.0, p0));
}

double bartlett_from_p0(double c0, double tau, double p0) { return 0.5 * c0 * tau * p0; }

BartlettReadout d_bartlett(const CorrelationSeries& series, int m_anc) {
    if (m_anc < 0 || m_anc > 62) throw std::invalid_argument("d_bartlett: bad ancilla width");
    BartlettReadout r;
    r.m_anc = m_anc;
    r.k = 1LL << m_anc;
    r.tau = static_cast<double>(r.k) * series.dt;
    r.p0 = p0_bartlett(series, r.k);
    r.d = bartlett_from_p0(series.c0, r.tau, r.p0);
    return r;
}

RichardsonFit richardson(const std::vector<BartlettReadout>& readouts) {
    const int n = static_cast<int>(readouts.size());
    if (n < 2) throw std::invalid_argument("richardson: need at least two readouts");
    double sx = 0.0, sy = 0.0;
    for (const auto& r : readouts) {
        sx += 1.0 / static_cast<double>(r.k);
        sy += r.d;
    }
    const double xbar = sx / n, ybar = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& r : readouts) {
        const double dx = 1.0 / static_cast<double>(r.k) - xbar;
        sxx += dx * dx;
        sxy += dx * (r.d - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("richardson: readouts share one K");
    RichardsonFit fit;
    fit.a1 = sxy / sxx;
    fit.d_inf = ybar - fit.a1 * xbar;
    if (n > 2) {
        double ssr = 0.0;
        for (const auto& r : readouts) {
            const double x = 1.0 / static_cast<double>(r.k);
            const double e = r.d - (fit.d_inf + fit.a1 * x);
            ssr += e * e;
        }
        const double s2 = ssr / (n - 2);
        fit.stderr_d = std::sqrt(s2 * (1.0 / n + xbar * xbar / sxx));
    }
    return fit;
}

std::vector<double> qpe_statevector(const KvnState& excited, const PotentialModel& model,
                                    const StepConfig& cfg, int m_anc) {
    if (m_anc < 1 || m_anc > 30) throw std::invalid_argument("qpe_statevector: bad ancilla width");
    const Eigen::Index total = excited.grid.total_dim();
    const long long k = 1LL << m_anc;
    if (k * static_cast<long long>(total) > kJointGuard)
        throw budget_error("qpe_statevector: joint register exceeds 2^30 amplitudes");

    Eigen::VectorXcd joint(static_cast<Eigen::Index>(k) * total);
    const double w = 1.0 / std::sqrt(static_cast<double>(k));
    KvnState work = excited;
    joint.segment(0, total) = w * work.amp;
    StepPlan plan(excited.grid, model, cfg);
    for (long long r = 1; r < k; ++r) {
        plan.step(work);
        joint.segment(static_cast<Eigen::Index>(r) * total, total) = w * work.amp;
    }
    // Inverse transform across the register axis turns accumulated phases
    // into bin amplitudes.
    fft_axis(joint.data(), static_cast<int>(k), total, 1, true);

    std::vector<double> probs(static_cast<std::size_t>(k));
    for (long long l = 0; l < k; ++l)
        probs[static_cast<std::size_t>(l)] =
            joint.segment(static_cast<Eigen::Index>(l) * total, total).squaredNorm();
    return probs;
}

std::vector<double> fejer_reference(const Eigen::MatrixXcd& step_unitary,
                                    const Eigen::VectorXcd& excited, int m_anc) {
    if (m_anc < 1 || m_anc > 24) throw std::invalid_argument("fejer_reference: bad ancilla width");
    if (step_unitary.rows() != step_unitary.cols() || step_unitary.rows() != excited.size())
        throw std::invalid_argument("fejer_reference: shape mismatch");
    const long long k = 1LL << m_anc;

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(step_unitary);
    if (schur.info() != Eigen::Success)
        throw std::runtime_error("fejer_reference: Schur factorization failed");
    const Eigen::VectorXcd a = schur.matrixU().adjoint() * excited;

    const Eigen::Index n = excited.size();
    std::vector<double> probs(static_cast<std::size_t>(k), 0.0);
    for (long long l = 0; l < k; ++l) {
        const double shift = 2.0 * M_PI * static_cast<double>(l) / static_cast<double>(k);
        double p = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double theta = std::arg(schur.matrixT()(j, j));
            p += std::norm(a[j]) * averaging_kernel(theta + shift, k);
        }
        probs[static_cast<std::size_t>(l)] = p;
    }
    return probs;
}

double peak_deviation(const CorrelationSeries& a, const CorrelationSeries& ref) {
    if (a.c.empty() || ref.c.empty()) throw std::invalid_argument("peak_deviation: empty series");
    if (std::abs(a.dt - ref.dt) > 1e-12 * std::max(a.dt, ref.dt))
        throw std::invalid_argument("peak_deviation: mismatched time grids");
    const std::size_t n = std::min(a.c.size(), ref.c.size());
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        m = std::max(m, std::abs(a.c0 * a.c[k] - ref.c0 * ref.c[k]));
    return m / a.c0;
}

GridErrorFit grid_error_scan(const std::vector<std::pair<int, double>>& err_by_n) {
    GridErrorFit fit;
    if (err_by_n.size() < 2) throw std::invalid_argument("grid_error_scan: need two points");
    std::vector<double> lx, ly;
    for (const auto& [n, e] : err_by_n) {
        if (e <= 0.0) return fit;  // converged below representable error
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(e));
    }
    const int n = static_cast<int>(lx.size());
    double xbar = 0.0, ybar = 0.0;
    for (int i = 0; i < n; ++i) {
        xbar += lx[i];
        ybar += ly[i];
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - xbar) * (lx[i] - xbar);
        sxy += (lx[i] - xbar) * (ly[i] - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("grid_error_scan: need distinct sizes");
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.ok = true;
    return fit;
}

int qubits_for_target(double gamma, double a, double eps) {
    if (gamma <= 0.0 || a <= 0.0 || eps <= 0.0)
        throw std::invalid_argument("qubits_for_target: positive inputs required");
    const double n = std::ceil(std::log2(a / eps) / gamma);
    return n < 1.0 ? 1 : static_cast<int>(n);
}

double dbart_error_bound(double c0, double tau, double eps_c) {
    return 0.5 * c0 * tau * eps_c;
}

}  // namespace kvnmd
