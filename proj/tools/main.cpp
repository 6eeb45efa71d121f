#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "kvnmd/errors.hpp"
#include "kvnmd/parallel.hpp"
#include "kvnmd/pipeline.hpp"

namespace {

using namespace kvnmd;

std::string default_out() {
    const char* env = std::getenv("KVNMD_OUT");
    return env != nullptr && *env != '\0' ? env : "out";
}

void add_grid_options(CLI::App* cmd, GkParams& p, std::string& ensemble, std::string& manc) {
    cmd->add_option("--ensemble", ensemble, "nve or nvt")->check(CLI::IsMember({"nve", "nvt"}));
    cmd->add_option("--particles", p.n_particles, "1 or 2 (2: coupled periodic cell)")
        ->check(CLI::Range(1, 2));
    cmd->add_option("--nq", p.n_q, "position points per axis");
    cmd->add_option("--np", p.n_p, "momentum points per axis");
    cmd->add_option("--nxi", p.n_xi, "thermostat points (nvt)");
    cmd->add_option("--v0", p.v0, "potential amplitude");
    cmd->add_option("--mass", p.mass, "particle mass");
    cmd->add_option("--eps", p.eps, "single-site tilt of the coupled cell");
    cmd->add_option("--t0", p.t0, "bath temperature");
    cmd->add_option("--qmass", p.q_mass, "thermostat mass");
    cmd->add_option("--nf", p.n_f, "thermostatted degrees of freedom (0: auto)");
    cmd->add_option("--nsigma-p", p.n_sigma_p, "momentum window half-width in sigmas");
    cmd->add_option("--nsigma-xi", p.n_sigma_xi, "thermostat window half-width in sigmas");
    cmd->add_option("--dt", p.dt, "time step");
    cmd->add_option("--steps", p.n_steps, "propagation steps");
    cmd->add_option("--stride", p.record_stride, "record every this many steps");
    cmd->add_option("--flux-dof", p.flux_dof, "velocity component used as the flux");
    cmd->add_option("--budget", p.budget, "amplitude-count guard");
    cmd->add_option("--seed", p.seed, "random seed for the trajectory cross-check");
    cmd->add_option("--md-traj", p.md_traj, "trajectories for the classical cross-check");
    cmd->add_option("--md-steps", p.md_steps, "trajectory steps (0: match --steps)");
    cmd->add_flag("--md-single-origin{false}", p.md_multi_origin,
                  "correlate only against the first sample of each trajectory");
    cmd->add_option("--plateau-lo", p.plateau_lo, "plateau window start");
    cmd->add_option("--plateau-hi", p.plateau_hi, "plateau window end");
    cmd->add_option("--manc", manc, "comma list of readout register sizes");
}

void finish_gk(GkParams& p, const std::string& ensemble, const std::string& manc, bool gk) {
    p.ensemble = ensemble == "nvt" ? Ensemble::NVT : Ensemble::NVE;
    if (!gk) {
        p.m_ancs.clear();
    } else if (!manc.empty()) {
        p.m_ancs.clear();
        std::stringstream ss(manc);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) p.m_ancs.push_back(std::stoi(tok));
    }
}

void print_gk(const GkParams& p, const GkResult& r) {
    std::printf("C0 = %.10g, %zu lags at dt*stride = %.10g\n", r.kvn.c0, r.kvn.c.size(),
                r.kvn.dt);
    for (const auto& b : r.readouts)
        std::printf("m = %2d  K = %6lld  tau = %10.6g  P0 = %.8g  D = %.8g\n", b.m_anc, b.k,
                    b.tau, b.p0, b.d);
    if (r.readouts.size() >= 2)
        std::printf("extrapolated D = %.8g +- %.3g\n", r.fit.d_inf, r.fit.stderr_d);
    if (p.md_traj > 0)
        std::printf("trajectory plateau D = %.8g (std %.3g over [%g, %g])\n", r.md_plateau.mean,
                    r.md_plateau.stddev, p.plateau_lo, p.plateau_hi);
    if (!p.out.empty()) std::printf("artifacts in %s\n", p.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-space state-vector molecular dynamics toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    int threads = -1;
    std::string out = default_out();
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("-o,--out", out, "artifact directory ('' disables writing)");
    app.fallthrough();  // globals may trail the subcommand

    // correlation-only and full transport readouts share one option block
    GkParams vp, gp;
    std::string vp_ens = "nve", gp_ens = "nve", vp_manc, gp_manc;
    CLI::App* vacf = app.add_subcommand("vacf", "velocity autocorrelation of the encoded state");
    add_grid_options(vacf, vp, vp_ens, vp_manc);
    CLI::App* gk = app.add_subcommand("gk", "transport coefficient via the register readout");
    add_grid_options(gk, gp, gp_ens, gp_manc);

    QpeParams qp;
    CLI::App* qpe = app.add_subcommand("qpe", "readout register marginals vs spectral reference");
    qpe->add_option("--nq", qp.n_q, "position points");
    qpe->add_option("--np", qp.n_p, "momentum points");
    qpe->add_option("--manc", qp.m_anc, "readout register size");
    qpe->add_option("--dt", qp.dt, "time step");
    qpe->add_option("--v0", qp.v0, "potential amplitude");
    qpe->add_option("--mass", qp.mass, "particle mass");
    qpe->add_option("--t0", qp.t0, "bath temperature");
    qpe->add_option("--nsigma-p", qp.n_sigma_p, "momentum window half-width in sigmas");
    qpe->add_option("--budget", qp.budget, "amplitude-count guard");

    MlaeParams mp;
    std::string mp_naive;
    CLI::App* mlae = app.add_subcommand("mlae", "estimator error against query count");
    mlae->add_option("--amplitude", mp.amplitude, "true amplitude");
    mlae->add_option("--min-stages", mp.min_stages, "smallest schedule length");
    mlae->add_option("--max-stages", mp.max_stages, "largest schedule length");
    mlae->add_option("--shots", mp.shots, "shots per stage");
    mlae->add_option("--reps", mp.n_rep, "repetitions per schedule");
    mlae->add_option("--slope-stages", mp.slope_stages, "late points entering the fit");
    mlae->add_option("--naive-shots", mp_naive, "comma list of direct-sampling shot counts");
    mlae->add_option("--seed", mp.seed, "random seed");

    ResourceParams rp;
    std::string rp_totals, rp_ps;
    CLI::App* res = app.add_subcommand("resources", "entangling-gate cost tables");
    res->add_option("--n-totals", rp_totals, "comma list of total register sizes");
    res->add_option("--n-ps", rp_ps, "comma list of momentum register sizes");
    res->add_option("--nxi", rp.n_xi, "thermostat register size");
    res->add_option("--ndof", rp.n_dof, "momentum registers coupled to the thermostat");
    res->add_option("--qsd-c1", rp.qsd_c1, "generic-unitary model prefactor");
    res->add_flag("--qsp", rp.qsp, "include the polynomial block-encoding estimate");
    res->add_option("--np", rp.qsp_np, "momentum register for the block-encoding estimate");
    res->add_option("--eps", rp.qsp_eps, "target accuracy of the block-encoding estimate");
    res->add_option("--dt", rp.qsp_dt, "time step of the block-encoding estimate");

    StabilityParams sp;
    double st_tsim = 60.0;
    std::string st_nsigmas, st_dts;
    int st_nq = 32, st_np = 32, st_nxi = 16, st_stride = 10;
    CLI::App* stab = app.add_subcommand("stability", "long-run thermostat drift scans");
    stab->add_option("--t-sim", st_tsim, "simulated time per case");
    stab->add_option("--nsigmas", st_nsigmas, "comma list of window half-widths");
    stab->add_option("--dts", st_dts, "comma list of time steps");
    stab->add_option("--nq", st_nq, "position points");
    stab->add_option("--np", st_np, "momentum points");
    stab->add_option("--nxi", st_nxi, "thermostat points");
    stab->add_option("--stride", st_stride, "steps between recorded temperatures");
    stab->add_option("--v0", sp.v0, "potential amplitude");
    stab->add_option("--mass", sp.mass, "particle mass");
    stab->add_option("--t0", sp.t0, "bath temperature");
    stab->add_option("--qmass", sp.q_mass, "thermostat mass");

    CLI::App* validate = app.add_subcommand("validate", "fast physics self-checks");

    std::string cfg_path;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "drive an experiment from a config file");
    run->add_option("config", cfg_path, "key=value config file")->required();
    run->add_option("-s,--set", overrides, "override as key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads >= 0) kvnmd::set_worker_count(threads);

        if (vacf->parsed() || gk->parsed()) {
            GkParams& p = vacf->parsed() ? vp : gp;
            finish_gk(p, vacf->parsed() ? vp_ens : gp_ens, vacf->parsed() ? vp_manc : gp_manc,
                      gk->parsed());
            p.out = out;
            print_gk(p, run_gk(p));
            return 0;
        }
        if (qpe->parsed()) {
            qp.out = out;
            const QpeResult r = run_qpe(qp);
            std::printf("%zu register bins, max |simulated - reference| = %.6g\n",
                        r.bins.size(), r.max_abs_diff);
            if (!out.empty()) std::printf("artifacts in %s\n", out.c_str());
            return 0;
        }
        if (mlae->parsed()) {
            if (!mp_naive.empty()) {
                mp.naive_shots.clear();
                std::stringstream ss(mp_naive);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!tok.empty()) mp.naive_shots.push_back(std::stoll(tok));
            }
            mp.out = out;
            const MlaeScalingResult r = run_mlae_scaling(mp);
            for (std::size_t i = 0; i < r.mlae.size(); ++i)
                std::printf("stages %2d  queries %8lld  rmse %.6g\n",
                            mp.min_stages + static_cast<int>(i), r.mlae[i].n_queries,
                            r.mlae[i].rmse);
            std::printf("late-stage slope %.4f, direct-sampling slope %.4f\n", r.mlae_slope,
                        r.naive_slope);
            if (!out.empty()) std::printf("artifacts in %s\n", out.c_str());
            return 0;
        }
        if (res->parsed()) {
            if (!rp_totals.empty()) {
                rp.n_totals.clear();
                std::stringstream ss(rp_totals);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!tok.empty()) rp.n_totals.push_back(std::stoi(tok));
            }
            if (!rp_ps.empty()) {
                rp.n_ps.clear();
                std::stringstream ss(rp_ps);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    if (!tok.empty()) rp.n_ps.push_back(std::stoi(tok));
            }
            rp.qsp_nxi = rp.n_xi;
            rp.out = out;
            const ResourceResult r = run_resources(rp);
            std::printf("%zu cost rows\n", r.rows.size());
            if (r.has_qsp)
                std::printf(
                    "block-encoding estimate: alpha = %g, tau = %g, degree = %d, "
                    "per-encoding CX = %lld, total CX = %lld\n",
                    r.qsp.alpha, r.qsp.tau, r.qsp.truncation, r.qsp.c_be, r.qsp.total);
            if (!out.empty()) std::printf("artifacts in %s\n", out.c_str());
            return 0;
        }
        if (stab->parsed()) {
            if (!st_nsigmas.empty() || !st_dts.empty()) {
                std::vector<double> nss{3.0, 4.0, 5.0}, dts{0.01};
                auto parse = [](const std::string& s, std::vector<double>& v) {
                    if (s.empty()) return;
                    v.clear();
                    std::stringstream ss(s);
                    std::string tok;
                    while (std::getline(ss, tok, ','))
                        if (!tok.empty()) v.push_back(std::stod(tok));
                };
                parse(st_nsigmas, nss);
                parse(st_dts, dts);
                for (double ns : nss)
                    for (double dt : dts) {
                        StabilityCase c;
                        c.t_sim = st_tsim;
                        c.n_q = st_nq;
                        c.n_p = st_np;
                        c.n_xi = st_nxi;
                        c.record_stride = st_stride;
                        c.n_sigma_p = ns;
                        c.n_sigma_xi = ns;
                        c.dt = dt;
                        c.scan_param = ns;
                        sp.cases.push_back(c);
                    }
            } else {
                sp.cases = default_stability_cases(st_tsim);
            }
            sp.out = out;
            for (const auto& row : run_stability(sp))
                std::printf("param %6g  dt %5g  max drift %.4g  final overlap %.6f\n",
                            row.scan.scan_param != 0.0 ? row.scan.scan_param
                                                       : row.scan.n_sigma_p,
                            row.scan.dt, row.max_temp_drift, row.final_overlap);
            if (!out.empty()) std::printf("artifacts in %s\n", out.c_str());
            return 0;
        }
        if (validate->parsed()) {
            bool all = true;
            for (const auto& c : kvnmd::run_validate()) {
                std::printf("%-26s %s  (%s)\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                            c.detail.c_str());
                all = all && c.pass;
            }
            return all ? 0 : 1;
        }
        if (run->parsed()) {
            Config cfg = parse_config_file(cfg_path);
            apply_overrides(cfg, overrides);
            if (!cfg.count("out") && !out.empty()) cfg["out"] = out;
            if (threads >= 0) cfg.erase("threads");  // the flag already applied
            return run_experiment(cfg);
        }
    } catch (const budget_error& e) {
        std::fprintf(stderr, "resource budget exceeded: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
