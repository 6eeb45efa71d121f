#include <cmath>
#include <stdexcept>

#include "kvnmd/phase_space.hpp"
#include "kvnmd/stability.hpp"

namespace kvnmd {

double tail_fraction(double n_sigma) {
    if (n_sigma <= 0.0) throw std::invalid_argument("tail_fraction: positive width required");
    return std::exp(-0.5 * n_sigma * n_sigma);
}

StabilityRow run_stability_case(const PotentialModel& model, const StepConfig& cfg,
                                const StabilityCase& sc) {
    if (model.n_dof() != 1)
        throw std::invalid_argument("run_stability_case: single-particle cases only");
    if (sc.dt <= 0.0 || sc.t_sim <= 0.0 || sc.record_stride <= 0)
        throw std::invalid_argument("run_stability_case: bad time layout");

    const double m = model.masses[0];
    const double sig_p = std::sqrt(m * cfg.t0) * sc.n_sigma_p;
    const double sig_xi = std::sqrt(cfg.t0 / cfg.q_mass) * sc.n_sigma_xi;
    PhaseGrid grid({AxisSpec::sized("q1", true, sc.n_q, -M_PI, M_PI),
                    AxisSpec::sized("p1", false, sc.n_p, -sig_p, sig_p),
                    AxisSpec::sized("xi", false, sc.n_xi, -sig_xi, sig_xi)});

    KvnState psi = encode_canonical(grid, model, 1.0 / cfg.t0, cfg.q_mass);
    const Eigen::VectorXcd psi0 = psi.amp;

    StepConfig run = cfg;
    run.ensemble = Ensemble::NVT;
    run.dt = sc.dt;
    StepPlan plan(grid, model, run);

    const int n_steps = static_cast<int>(std::llround(sc.t_sim / sc.dt));
    StabilityRow row;
    row.scan = sc;
    for (int step = 1; step <= n_steps; ++step) {
        plan.step(psi);
        if (step % sc.record_stride == 0 || step == n_steps) {
            const double t_kin = kinetic_temperature(psi, model, cfg.n_f);
            const double drift = std::abs(t_kin - cfg.t0) / cfg.t0;
            row.max_temp_drift = std::max(row.max_temp_drift, drift);
            if (step == n_steps) row.final_temp_drift = drift;
        }
    }
    row.final_overlap = std::norm(psi0.dot(psi.amp));
    row.norm_error = std::abs(psi.amp.norm() - 1.0);
    return row;
}

std::vector<StabilityRow> run_scan(const PotentialModel& model, const StepConfig& cfg,
                                   const std::vector<StabilityCase>& cases) {
    std::vector<StabilityRow> rows;
    rows.reserve(cases.size());
    for (const auto& sc : cases) rows.push_back(run_stability_case(model, cfg, sc));
    return rows;
}

}  // namespace kvnmd
