#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kvnmd/classical_ref.hpp"
#include "kvnmd/fft.hpp"
#include "kvnmd/parallel.hpp"

namespace kvnmd {

namespace {

double flux(const MdState& s, const PotentialModel& model, int dof) {
    return s.p[static_cast<std::size_t>(dof)] / model.masses[static_cast<std::size_t>(dof)];
}

// Linear autocorrelation sum_o v[o] v[o+s] for all s, via zero-padded FFT.
std::vector<double> autocorrelation_sums(const std::vector<double>& v) {
    std::size_t m = 1;
    while (m < 2 * v.size()) m <<= 1;
    std::vector<Complex> buf(m, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < v.size(); ++i) buf[i] = Complex(v[i], 0.0);
    fft_inplace(buf.data(), m, false);
    for (std::size_t i = 0; i < m; ++i) buf[i] = Complex(std::norm(buf[i]), 0.0);
    fft_inplace(buf.data(), m, true);
    // the transforms are unitary, so the raw lag sums carry a sqrt(m) factor
    const double scale = std::sqrt(static_cast<double>(m));
    std::vector<double> out(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) out[s] = buf[s].real() * scale;
    return out;
}

void kick(MdState& s, const PotentialModel& model, double h) {
    for (int i = 0; i < model.n_dof(); ++i) s.p[i] += h * model.force(i, s.q);
}

void drift(MdState& s, const PotentialModel& model, double h) {
    for (int i = 0; i < model.n_dof(); ++i) s.q[i] += h * s.p[i] / model.masses[i];
}

void verlet_kernel(MdState& s, const PotentialModel& model, double dt) {
    kick(s, model, 0.5 * dt);
    drift(s, model, dt);
    kick(s, model, 0.5 * dt);
}

void xi_advance(MdState& s, const PotentialModel& model, const StepConfig& cfg, double h) {
    double twice_ke = 0.0;
    for (int i = 0; i < model.n_dof(); ++i) twice_ke += s.p[i] * s.p[i] / model.masses[i];
    s.xi += h * (twice_ke - cfg.n_f * cfg.t0) / cfg.q_mass;
}

void momentum_damp(MdState& s, double h) {
    const double f = std::exp(-s.xi * h);
    for (double& p : s.p) p *= f;
}

}  // namespace

void verlet_step(MdState& s, const PotentialModel& model, double dt) {
    verlet_kernel(s, model, dt);
    s.t += dt;
}

void nose_hoover_step(MdState& s, const PotentialModel& model, const StepConfig& cfg, double dt) {
    xi_advance(s, model, cfg, 0.25 * dt);
    momentum_damp(s, 0.5 * dt);
    xi_advance(s, model, cfg, 0.25 * dt);
    verlet_kernel(s, model, dt);
    xi_advance(s, model, cfg, 0.25 * dt);
    momentum_damp(s, 0.5 * dt);
    xi_advance(s, model, cfg, 0.25 * dt);
    s.t += dt;
}

MdState thermal_sample(const PotentialModel& model, const StepConfig& cfg, CounterRng& rng,
                       int burn_in, double dt) {
    const int n = model.n_dof();
    MdState s;
    s.q.assign(n, 0.0);
    s.p.resize(n);
    for (int i = 0; i < n; ++i)
        s.p[i] = std::sqrt(model.masses[i] * cfg.t0) * rng.next_gaussian();

    const double c1 = std::exp(-dt);  // unit friction
    const double c2 = std::sqrt(1.0 - c1 * c1);
    for (int step = 0; step < burn_in; ++step) {
        kick(s, model, 0.5 * dt);
        drift(s, model, 0.5 * dt);
        for (int i = 0; i < n; ++i)
            s.p[i] = c1 * s.p[i] +
                     c2 * std::sqrt(model.masses[i] * cfg.t0) * rng.next_gaussian();
        drift(s, model, 0.5 * dt);
        kick(s, model, 0.5 * dt);
    }
    if (cfg.ensemble == Ensemble::NVT)
        s.xi = std::sqrt(cfg.t0 / cfg.q_mass) * rng.next_gaussian();
    s.t = 0.0;
    return s;
}

CorrelationSeries vacf_md(const PotentialModel& model, const StepConfig& cfg,
                          const VacfMdParams& params) {
    if (params.n_traj <= 0 || params.n_steps <= 0 || params.record_stride <= 0 ||
        params.dt <= 0.0 || params.max_lag < 0)
        throw std::invalid_argument("vacf_md: invalid parameters");
    if (params.flux_dof < 0 || params.flux_dof >= model.n_dof())
        throw std::invalid_argument("vacf_md: no such degree of freedom");

    const int n_rec = params.n_steps / params.record_stride + 1;
    const int n_lags =
        params.max_lag > 0 ? std::min(params.max_lag + 1, n_rec) : n_rec;

    // One correlation row per trajectory inside a fixed-size chunk; chunks are
    // reduced serially in trajectory order so the sum never depends on the
    // worker count.
    const int chunk = 32;
    Eigen::MatrixXd scratch(chunk, n_lags);
    std::vector<double> acc(n_lags, 0.0);

    for (int base = 0; base < params.n_traj; base += chunk) {
        const int batch = std::min(chunk, params.n_traj - base);
        parallel_for(batch, [&](std::size_t bi) {
            const int traj = base + static_cast<int>(bi);
            CounterRng rng(params.seed, static_cast<std::uint64_t>(traj));
            MdState s = thermal_sample(model, cfg, rng);

            std::vector<double> v(static_cast<std::size_t>(n_rec));
            v[0] = flux(s, model, params.flux_dof);
            for (int step = 1, rec = 1; step <= params.n_steps; ++step) {
                if (cfg.ensemble == Ensemble::NVT)
                    nose_hoover_step(s, model, cfg, params.dt);
                else
                    verlet_step(s, model, params.dt);
                if (step % params.record_stride == 0)
                    v[static_cast<std::size_t>(rec++)] = flux(s, model, params.flux_dof);
            }

            if (params.multi_origin) {
                const std::vector<double> sums = autocorrelation_sums(v);
                for (int k = 0; k < n_lags; ++k)
                    scratch(static_cast<Eigen::Index>(bi), k) =
                        sums[static_cast<std::size_t>(k)] / static_cast<double>(n_rec - k);
            } else {
                for (int k = 0; k < n_lags; ++k)
                    scratch(static_cast<Eigen::Index>(bi), k) =
                        v[0] * v[static_cast<std::size_t>(k)];
            }
        });
        for (int bi = 0; bi < batch; ++bi)
            for (int k = 0; k < n_lags; ++k) acc[k] += scratch(bi, k);
    }

    CorrelationSeries out;
    out.dt = params.dt * params.record_stride;
    out.c0 = acc[0] / static_cast<double>(params.n_traj);
    if (out.c0 <= 0.0) throw std::runtime_error("vacf_md: degenerate zero-lag value");
    out.c.resize(n_lags);
    for (int k = 0; k < n_lags; ++k)
        out.c[k] = acc[k] / static_cast<double>(params.n_traj) / out.c0;
    return out;
}

}  // namespace kvnmd
