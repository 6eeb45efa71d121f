#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "kvnmd/errors.hpp"
#include "kvnmd/fft.hpp"
#include "kvnmd/parallel.hpp"
#include "kvnmd/pipeline.hpp"
#include "kvnmd/rng.hpp"

namespace kvnmd {

namespace {

using nlohmann::json;

bool is_pow2_i(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_i(int n) {
    int b = 0;
    while ((1 << b) < n) ++b;
    return b;
}

AxisSpec make_axis(const std::string& label, bool periodic, int n, double lo, double hi) {
    if (is_pow2_i(n)) return AxisSpec::binary(label, periodic, log2_i(n), lo, hi);
    return AxisSpec::sized(label, periodic, n, lo, hi);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated integer list");
    return out;
}

std::vector<long long> parse_ll_list(const std::string& s) {
    std::vector<long long> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoll(tok));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated number list");
    return out;
}

template <class T>
std::string join_list(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_floating_point_v<T>)
            s += format_g17(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

std::string ensemble_name(Ensemble e) { return e == Ensemble::NVT ? "nvt" : "nve"; }

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string timestamp_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_metadata(const std::string& out, const std::string& driver, const Config& echo) {
    if (out.empty()) return;
    json j;
    j["driver"] = driver;
    j["version"] = kVersion;
    j["config_hash"] = hash_hex(config_hash(echo));
    j["timestamp"] = timestamp_utc();  // informational; not part of the
                                       // byte-identical guarantee
    j["config"] = json::object();
    for (const auto& [k, v] : echo) j["config"][k] = v;
    write_text_file(out + "/metadata.json", j.dump(2) + "\n");
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

Config to_config(const GkParams& p) {
    Config c;
    c["experiment"] = p.m_ancs.empty() ? "vacf" : "gk";
    c["ensemble"] = ensemble_name(p.ensemble);
    c["particles"] = std::to_string(p.n_particles);
    c["nq"] = std::to_string(p.n_q);
    c["np"] = std::to_string(p.n_p);
    if (p.ensemble == Ensemble::NVT) c["nxi"] = std::to_string(p.n_xi);
    c["v0"] = format_g17(p.v0);
    c["mass"] = format_g17(p.mass);
    if (p.n_particles == 2) c["eps"] = format_g17(p.eps);
    c["t0"] = format_g17(p.t0);
    c["qmass"] = format_g17(p.q_mass);
    c["nf"] = std::to_string(p.n_f);
    c["nsigma_p"] = format_g17(p.n_sigma_p);
    c["nsigma_xi"] = format_g17(p.n_sigma_xi);
    c["dt"] = format_g17(p.dt);
    c["steps"] = std::to_string(p.n_steps);
    c["stride"] = std::to_string(p.record_stride);
    c["flux_dof"] = std::to_string(p.flux_dof);
    if (!p.m_ancs.empty()) c["manc"] = join_list(p.m_ancs);
    c["budget"] = std::to_string(p.budget);
    c["seed"] = std::to_string(p.seed);
    c["md_traj"] = std::to_string(p.md_traj);
    c["md_steps"] = std::to_string(p.md_steps);
    c["md_multi_origin"] = p.md_multi_origin ? "1" : "0";
    c["plateau_lo"] = format_g17(p.plateau_lo);
    c["plateau_hi"] = format_g17(p.plateau_hi);
    if (!p.out.empty()) c["out"] = p.out;
    return c;
}

}  // namespace

PhaseGrid benchmark_grid(const GkParams& p) {
    if (p.n_q < 2 || p.n_p < 2) throw std::invalid_argument("grid: need at least two points");
    if (p.n_particles != 1 && p.n_particles != 2)
        throw std::invalid_argument("grid: one or two particles");
    long long total = 1;
    for (int i = 0; i < p.n_particles; ++i) total *= static_cast<long long>(p.n_q) * p.n_p;
    if (p.ensemble == Ensemble::NVT) total *= p.n_xi;
    if (total > p.budget)
        throw budget_error("grid: " + std::to_string(total) + " amplitudes exceed the budget of " +
                           std::to_string(p.budget));
    const double sp = p.n_sigma_p * std::sqrt(p.mass * p.t0);
    std::vector<AxisSpec> axes;
    for (int i = 1; i <= p.n_particles; ++i)
        axes.push_back(make_axis("q" + std::to_string(i), true, p.n_q, -M_PI, M_PI));
    for (int i = 1; i <= p.n_particles; ++i)
        axes.push_back(make_axis("p" + std::to_string(i), false, p.n_p, -sp, sp));
    if (p.ensemble == Ensemble::NVT) {
        if (p.n_xi < 2) throw std::invalid_argument("grid: thermostat axis needs points");
        const double sx = p.n_sigma_xi * std::sqrt(p.t0 / p.q_mass);
        axes.push_back(make_axis("xi", false, p.n_xi, -sx, sx));
    }
    return PhaseGrid(axes);
}

PotentialModel benchmark_model(const GkParams& p) {
    if (p.n_particles == 2) return PotentialModel::coupled_cosine(p.v0, p.eps, p.mass, p.mass);
    return PotentialModel::cosine(p.v0, p.mass);
}

KvnState equilibrium_state(const PhaseGrid& grid, const PotentialModel& model,
                           const GkParams& p) {
    return encode_canonical(grid, model, 1.0 / p.t0, p.q_mass);
}

GkResult run_gk(const GkParams& p) {
    if (p.dt <= 0.0 || p.n_steps <= 0 || p.record_stride <= 0)
        throw std::invalid_argument("run_gk: bad time layout");
    const PotentialModel model = benchmark_model(p);
    StepConfig cfg;
    cfg.dt = p.dt;
    cfg.ensemble = p.ensemble;
    cfg.t0 = p.t0;
    cfg.q_mass = p.q_mass;
    cfg.n_f = p.n_f > 0 ? p.n_f : p.n_particles;

    const PhaseGrid grid = benchmark_grid(p);
    const KvnState eq = equilibrium_state(grid, model, p);

    GkResult r;
    r.kvn = vacf_kvn(eq, model, cfg, p.n_steps, p.record_stride, p.flux_dof);
    for (int m : p.m_ancs) r.readouts.push_back(d_bartlett(r.kvn, m));
    if (r.readouts.size() >= 2) r.fit = richardson(r.readouts);

    if (p.md_traj > 0) {
        VacfMdParams mp;
        mp.n_traj = p.md_traj;
        mp.n_steps = p.md_steps > 0 ? p.md_steps : p.n_steps;
        mp.record_stride = p.record_stride;
        mp.dt = p.dt;
        mp.seed = p.seed;
        mp.flux_dof = p.flux_dof;
        mp.multi_origin = p.md_multi_origin;
        r.md = vacf_md(model, cfg, mp);
        r.md_plateau = window_stats(r.md.dt, gk_running(r.md), p.plateau_lo, p.plateau_hi);
    }

    if (!p.out.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < r.kvn.c.size(); ++k)
            rows.push_back({r.kvn.dt * static_cast<double>(k), r.kvn.c[k]});
        write_csv(p.out + "/cvv_nq" + std::to_string(p.n_q) + ".csv", {"t", "c"}, rows);

        if (!r.readouts.empty()) {
            std::vector<std::vector<double>> brows;
            for (const auto& b : r.readouts)
                brows.push_back({static_cast<double>(b.m_anc), static_cast<double>(b.k), b.tau,
                                 b.p0, b.d});
            write_csv(p.out + "/bartlett.csv", {"m_anc", "K", "tau", "P0", "D"}, brows);

            json rj;
            rj["D_inf"] = r.fit.d_inf;
            rj["a1"] = r.fit.a1;
            rj["stderr"] = r.fit.stderr_d;
            rj["c0"] = r.kvn.c0;
            rj["points"] = json::array();
            for (const auto& b : r.readouts)
                rj["points"].push_back(
                    {{"m_anc", b.m_anc}, {"K", b.k}, {"tau", b.tau}, {"P0", b.p0}, {"D", b.d}});
            if (p.md_traj > 0) {
                rj["md"] = {{"plateau_mean", r.md_plateau.mean},
                            {"plateau_std", r.md_plateau.stddev},
                            {"window", {p.plateau_lo, p.plateau_hi}},
                            {"trajectories", p.md_traj}};
            }
            write_json_file(p.out + "/richardson.json", rj);
        }
        if (p.md_traj > 0) {
            std::vector<std::vector<double>> mrows;
            for (std::size_t k = 0; k < r.md.c.size(); ++k)
                mrows.push_back({r.md.dt * static_cast<double>(k), r.md.c[k]});
            write_csv(p.out + "/md_cvv.csv", {"t", "c"}, mrows);
        }
        write_metadata(p.out, p.m_ancs.empty() ? "vacf" : "gk", to_config(p));
    }
    return r;
}

QpeResult run_qpe(const QpeParams& p) {
    if (p.dt <= 0.0) throw std::invalid_argument("run_qpe: bad step");
    const PotentialModel model = PotentialModel::cosine(p.v0, p.mass);
    StepConfig cfg;
    cfg.dt = p.dt;
    cfg.ensemble = Ensemble::NVE;
    cfg.t0 = p.t0;

    GkParams gp;
    gp.ensemble = Ensemble::NVE;
    gp.n_q = p.n_q;
    gp.n_p = p.n_p;
    gp.v0 = p.v0;
    gp.mass = p.mass;
    gp.t0 = p.t0;
    gp.n_sigma_p = p.n_sigma_p;
    gp.budget = p.budget;
    const PhaseGrid grid = benchmark_grid(gp);

    KvnState excited = encode_canonical(grid, model, 1.0 / p.t0, 1.0);
    flux_excite(excited, model);

    QpeResult r;
    r.bins = qpe_statevector(excited, model, cfg, p.m_anc);
    r.reference = fejer_reference(dense_step_matrix(grid, model, cfg), excited.amp, p.m_anc);
    for (std::size_t l = 0; l < r.bins.size(); ++l)
        r.max_abs_diff = std::max(r.max_abs_diff, std::abs(r.bins[l] - r.reference[l]));

    if (!p.out.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t l = 0; l < r.bins.size(); ++l)
            rows.push_back({static_cast<double>(l), r.bins[l], r.reference[l]});
        write_csv(p.out + "/bins.csv", {"bin", "prob", "reference"}, rows);
        Config echo;
        echo["experiment"] = "qpe";
        echo["nq"] = std::to_string(p.n_q);
        echo["np"] = std::to_string(p.n_p);
        echo["manc"] = std::to_string(p.m_anc);
        echo["dt"] = format_g17(p.dt);
        echo["v0"] = format_g17(p.v0);
        echo["mass"] = format_g17(p.mass);
        echo["t0"] = format_g17(p.t0);
        echo["nsigma_p"] = format_g17(p.n_sigma_p);
        echo["budget"] = std::to_string(p.budget);
        echo["out"] = p.out;
        write_metadata(p.out, "qpe", echo);
    }
    return r;
}

double loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("loglog_slope: need two points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : points) {
        if (x <= 0.0 || y <= 0.0) throw std::invalid_argument("loglog_slope: positive data only");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double n = static_cast<double>(points.size());
    const double xbar = sx / n, ybar = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - xbar;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("loglog_slope: degenerate abscissae");
    return sxy / sxx;
}

MlaeScalingResult run_mlae_scaling(const MlaeParams& p) {
    if (p.min_stages < 1 || p.max_stages < p.min_stages)
        throw std::invalid_argument("run_mlae_scaling: bad stage range");
    if (p.slope_stages < 2) throw std::invalid_argument("run_mlae_scaling: bad fit window");

    MlaeScalingResult r;
    for (int l = p.min_stages; l <= p.max_stages; ++l)
        r.mlae.push_back(mlae_rmse(p.amplitude, eis_schedule(l, p.shots), p.n_rep, p.seed));
    for (long long s : p.naive_shots)
        r.naive.push_back(naive_rmse(p.amplitude, s, p.n_rep, p.seed + 1));

    const int fit_n = std::min<int>(p.slope_stages, static_cast<int>(r.mlae.size()));
    std::vector<std::pair<double, double>> tail;
    for (std::size_t i = r.mlae.size() - fit_n; i < r.mlae.size(); ++i)
        tail.push_back({static_cast<double>(r.mlae[i].n_queries), r.mlae[i].rmse});
    r.mlae_slope = loglog_slope(tail);

    std::vector<std::pair<double, double>> np;
    for (const auto& s : r.naive) np.push_back({static_cast<double>(s.n_queries), s.rmse});
    r.naive_slope = loglog_slope(np);

    if (!p.out.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < r.mlae.size(); ++i) {
            const double local =
                i == 0 ? 0.0
                       : (std::log(r.mlae[i].rmse) - std::log(r.mlae[i - 1].rmse)) /
                             (std::log(static_cast<double>(r.mlae[i].n_queries)) -
                              std::log(static_cast<double>(r.mlae[i - 1].n_queries)));
            rows.push_back({static_cast<double>(p.min_stages + static_cast<int>(i)),
                            static_cast<double>(r.mlae[i].n_queries), r.mlae[i].rmse, local});
        }
        write_csv(p.out + "/rmse_vs_queries.csv",
                  {"schedule_id", "N_queries", "rmse", "slope"}, rows);

        std::vector<std::vector<double>> nrows;
        for (std::size_t i = 0; i < r.naive.size(); ++i) {
            const double local =
                i == 0 ? 0.0
                       : (std::log(r.naive[i].rmse) - std::log(r.naive[i - 1].rmse)) /
                             (std::log(static_cast<double>(r.naive[i].n_queries)) -
                              std::log(static_cast<double>(r.naive[i - 1].n_queries)));
            nrows.push_back({static_cast<double>(r.naive[i].n_queries),
                             static_cast<double>(r.naive[i].n_queries), r.naive[i].rmse, local});
        }
        write_csv(p.out + "/naive_rmse.csv", {"schedule_id", "N_queries", "rmse", "slope"},
                  nrows);

        json sj;
        sj["mlae_slope"] = r.mlae_slope;
        sj["naive_slope"] = r.naive_slope;
        sj["slope_stages"] = fit_n;
        sj["amplitude"] = p.amplitude;
        write_json_file(p.out + "/slopes.json", sj);

        Config echo;
        echo["experiment"] = "mlae";
        echo["amplitude"] = format_g17(p.amplitude);
        echo["min_stages"] = std::to_string(p.min_stages);
        echo["max_stages"] = std::to_string(p.max_stages);
        echo["shots"] = std::to_string(p.shots);
        echo["reps"] = std::to_string(p.n_rep);
        echo["slope_stages"] = std::to_string(p.slope_stages);
        echo["naive_shots"] = join_list(p.naive_shots);
        echo["seed"] = std::to_string(p.seed);
        echo["out"] = p.out;
        write_metadata(p.out, "mlae", echo);
    }
    return r;
}

ResourceResult run_resources(const ResourceParams& p) {
    ResourceResult r;
    for (int n : p.n_totals)
        r.rows.push_back({n, "nve", static_cast<double>(nve_cx_model(n))});
    for (int np : p.n_ps)
        r.rows.push_back({np, "h3_pauli", static_cast<double>(h3_pauli_cx(np, p.n_xi, p.n_dof))});
    if (p.n_xi >= 2 && p.n_xi <= 4)
        for (int np : p.n_ps) r.rows.push_back({np, "nvt_fit", nvt_cx_fit(np, p.n_xi)});
    for (int n : p.n_totals) r.rows.push_back({n, "qsd", qsd_cx_model(n, p.qsd_c1)});
    if (p.qsp) {
        r.has_qsp = true;
        r.qsp = qsp_best_case(p.qsp_np, p.qsp_nxi, p.qsp_eps, p.qsp_dt);
        r.rows.push_back({p.qsp_np + p.qsp_nxi, "qsp", static_cast<double>(r.qsp.total)});
    }

    if (!p.out.empty()) {
        const std::filesystem::path dir(p.out);
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / "resources.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("run_resources: cannot open output");
        out << "n,model,cx_count\n";
        for (const auto& row : r.rows)
            out << row.n << "," << row.model << "," << format_g17(row.cx) << "\n";
        out.close();

        if (r.has_qsp) {
            json qj;
            qj["alpha"] = r.qsp.alpha;
            qj["tau"] = r.qsp.tau;
            qj["truncation"] = r.qsp.truncation;
            qj["c_be"] = r.qsp.c_be;
            qj["total"] = r.qsp.total;
            write_json_file(p.out + "/qsp.json", qj);
        }
        Config echo;
        echo["experiment"] = "resources";
        echo["n_totals"] = join_list(p.n_totals);
        echo["n_ps"] = join_list(p.n_ps);
        echo["nxi"] = std::to_string(p.n_xi);
        echo["ndof"] = std::to_string(p.n_dof);
        echo["qsd_c1"] = format_g17(p.qsd_c1);
        echo["qsp"] = p.qsp ? "1" : "0";
        if (p.qsp) {
            echo["qsp_np"] = std::to_string(p.qsp_np);
            echo["qsp_nxi"] = std::to_string(p.qsp_nxi);
            echo["qsp_eps"] = format_g17(p.qsp_eps);
            echo["qsp_dt"] = format_g17(p.qsp_dt);
        }
        echo["out"] = p.out;
        write_metadata(p.out, "resources", echo);
    }
    return r;
}

std::vector<StabilityCase> default_stability_cases(double t_sim) {
    std::vector<StabilityCase> cases;
    auto base = StabilityCase{};
    base.t_sim = t_sim;
    for (double ns : {3.0, 4.0, 5.0}) {
        for (double dt : {0.01, 0.05, 0.1}) {
            StabilityCase c = base;
            c.n_sigma_p = ns;
            c.n_sigma_xi = ns;
            c.dt = dt;
            c.scan_param = ns;
            cases.push_back(c);
        }
    }
    for (int np : {16, 64}) {
        StabilityCase c = base;
        c.n_p = np;
        c.scan_param = np;
        cases.push_back(c);
    }
    for (int nxi : {8, 32}) {
        StabilityCase c = base;
        c.n_xi = nxi;
        c.scan_param = nxi;
        cases.push_back(c);
    }
    StabilityCase wide = base;  // window-truncation floor probe
    wide.n_sigma_p = 8.0;
    wide.n_sigma_xi = 8.0;
    wide.n_p = 64;
    wide.n_xi = 32;
    wide.scan_param = 8.0;
    cases.push_back(wide);
    return cases;
}

std::vector<StabilityRow> run_stability(const StabilityParams& p) {
    if (p.cases.empty()) throw std::invalid_argument("run_stability: no cases");
    const PotentialModel model = PotentialModel::cosine(p.v0, p.mass);
    StepConfig cfg;
    cfg.ensemble = Ensemble::NVT;
    cfg.t0 = p.t0;
    cfg.q_mass = p.q_mass;
    cfg.n_f = p.n_f;

    const std::vector<StabilityRow> rows = run_scan(model, cfg, p.cases);

    if (!p.out.empty()) {
        std::vector<std::vector<double>> srows, frows;
        for (const auto& r : rows) {
            const double param = r.scan.scan_param != 0.0 ? r.scan.scan_param : r.scan.n_sigma_p;
            srows.push_back({param, r.scan.dt, r.max_temp_drift});
            frows.push_back({static_cast<double>(r.scan.n_q), static_cast<double>(r.scan.n_p),
                             static_cast<double>(r.scan.n_xi), r.scan.n_sigma_p,
                             r.scan.n_sigma_xi, r.scan.dt, r.scan.t_sim, r.max_temp_drift,
                             r.final_temp_drift, r.final_overlap, r.norm_error,
                             tail_fraction(r.scan.n_sigma_p)});
        }
        write_csv(p.out + "/drift_scan.csv", {"param", "dt", "delta_T"}, srows);
        write_csv(p.out + "/drift_scan_full.csv",
                  {"n_q", "n_p", "n_xi", "n_sigma_p", "n_sigma_xi", "dt", "t_sim",
                   "max_temp_drift", "final_temp_drift", "final_overlap", "norm_error",
                   "tail_fraction"},
                  frows);
        Config echo;
        echo["experiment"] = "stability";
        echo["t_sim"] = format_g17(p.cases.front().t_sim);
        echo["cases"] = std::to_string(p.cases.size());
        echo["v0"] = format_g17(p.v0);
        echo["mass"] = format_g17(p.mass);
        echo["t0"] = format_g17(p.t0);
        echo["qmass"] = format_g17(p.q_mass);
        echo["nf"] = std::to_string(p.n_f);
        echo["out"] = p.out;
        write_metadata(p.out, "stability", echo);
    }
    return rows;
}

std::vector<ValidateCheck> run_validate() {
    std::vector<ValidateCheck> checks;
    auto record = [&checks](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };

    const PotentialModel model = PotentialModel::cosine(1.0);

    {  // microcanonical propagation conserves the norm
        GkParams gp;
        gp.n_q = 16;
        gp.n_p = 16;
        const PhaseGrid grid = benchmark_grid(gp);
        KvnState s = encode_canonical(grid, model, 1.0, 1.0);
        StepConfig cfg;
        cfg.dt = 0.05;
        StepPlan plan(grid, model, cfg);
        for (int i = 0; i < 50; ++i) plan.step(s);
        const double err = std::abs(s.amp.norm() - 1.0);
        record("norm-conservation", err < 1e-12, "deviation " + format_g17(err));
    }
    {  // running the step with -dt undoes it
        GkParams gp;
        gp.n_q = 16;
        gp.n_p = 16;
        const PhaseGrid grid = benchmark_grid(gp);
        KvnState s = encode_canonical(grid, model, 1.0, 1.0);
        const Eigen::VectorXcd start = s.amp;
        StepConfig fwd;
        fwd.dt = 0.05;
        StepConfig bwd;
        bwd.dt = -0.05;
        StepPlan pf(grid, model, fwd), pb(grid, model, bwd);
        for (int i = 0; i < 25; ++i) pf.step(s);
        for (int i = 0; i < 25; ++i) pb.step(s);
        const double err = (s.amp - start).norm();
        record("reversibility", err < 1e-10, "distance " + format_g17(err));
    }
    {  // a force-free packet drifts by p t / m
        const PotentialModel free_model = PotentialModel::cosine(0.0);
        PhaseGrid grid({AxisSpec::binary("q1", true, 5, -M_PI, M_PI),
                        AxisSpec::binary("p1", false, 5, -6.0, 6.0)});
        KvnState s{grid, Eigen::VectorXcd(grid.total_dim())};
        const double q0 = -1.0, p0 = 1.0, sq = 0.35, sp = 0.5;
        for (Eigen::Index j = 0; j < grid.total_dim(); ++j) {
            const double q = grid.axis(0).value(grid.digit(j, 0));
            const double pp = grid.axis(1).value(grid.digit(j, 1));
            s.amp[j] = std::exp(-(q - q0) * (q - q0) / (4.0 * sq * sq) -
                                (pp - p0) * (pp - p0) / (4.0 * sp * sp));
        }
        s.amp /= s.amp.norm();
        StepConfig cfg;
        cfg.dt = 0.02;
        StepPlan plan(grid, free_model, cfg);
        // one time unit total: the sheared packet stays well inside the cell,
        // so the plain (non-circular) position mean is meaningful
        for (int i = 0; i < 50; ++i) plan.step(s);
        const double mean_q = expectation_axis(s, 0, [](double q) { return q; });
        const double err = std::abs(mean_q - (q0 + p0 * 1.0));
        record("free-drift", err < 1e-5, "mean offset " + format_g17(err));
    }
    {  // thermostat coupling contracts the momentum peak by exp(-xi dt)
        PhaseGrid grid({AxisSpec::binary("q1", true, 2, -M_PI, M_PI),
                        AxisSpec::binary("p1", false, 6, -6.0, 6.0),
                        AxisSpec::sized("xi", false, 2, 0.5, 1.5)});
        KvnState s{grid, Eigen::VectorXcd::Zero(grid.total_dim())};
        const double p0 = 2.0, sp = 0.5;
        for (Eigen::Index j = 0; j < grid.total_dim(); ++j) {
            if (grid.digit(j, 0) != 0 || grid.digit(j, 2) != 0) continue;
            const double pp = grid.axis(1).value(grid.digit(j, 1));
            s.amp[j] = std::exp(-(pp - p0) * (pp - p0) / (4.0 * sp * sp));
        }
        s.amp /= s.amp.norm();
        StepConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        apply_dilation(s, model, cfg, 0.2);
        const GridFunction marg = reduced_distribution(s, {"p1"});
        int jm = 1;
        for (int j = 1; j + 1 < grid.axis(1).n; ++j)
            if (marg.values[j] > marg.values[jm]) jm = j;
        const double ym = marg.values[jm - 1], y0 = marg.values[jm], yp = marg.values[jm + 1];
        const double off = 0.5 * (ym - yp) / (ym - 2.0 * y0 + yp);
        const double peak = grid.axis(1).value(jm) + off * grid.axis(1).delta();
        const double expect = p0 * std::exp(-0.5 * 0.2);
        const double err = std::abs(peak - expect);
        record("dilation-contraction", err < 0.02,
               "peak " + format_g17(peak) + " vs " + format_g17(expect));
    }
    {  // canonical state is (approximately) stationary under the NVT flow
        GkParams gp;
        gp.ensemble = Ensemble::NVT;
        gp.n_q = 16;
        gp.n_p = 16;
        gp.n_xi = 8;
        gp.n_sigma_p = 5.0;
        gp.n_sigma_xi = 5.0;
        const PhaseGrid grid = benchmark_grid(gp);
        KvnState s = encode_canonical(grid, model, 1.0, 1.0);
        StepConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        cfg.dt = 0.02;
        StepPlan plan(grid, model, cfg);
        for (int i = 0; i < 100; ++i) plan.step(s);
        const double t_kin = kinetic_temperature(s, model, 1);
        const double norm_err = std::abs(s.amp.norm() - 1.0);
        const bool pass = std::abs(t_kin - 1.0) < 0.05 && norm_err < 1e-12;
        record("thermostat-stationarity", pass,
               "T_kin " + format_g17(t_kin) + ", norm err " + format_g17(norm_err));
    }
    {  // spectral transform round-trips
        CounterRng rng(123, 0);
        Eigen::VectorXcd v(1024);
        for (int i = 0; i < 1024; ++i) v[i] = Complex(rng.next_gaussian(), rng.next_gaussian());
        Eigen::VectorXcd w = v;
        fft_inplace(w.data(), 1024, false);
        fft_inplace(w.data(), 1024, true);
        const double err = (w - v).norm();
        record("transform-roundtrip", err < 1e-12, "distance " + format_g17(err));
    }
    return checks;
}

int run_experiment(const Config& cfg) {
    const std::string exp = cfg_str(cfg, "experiment", "");
    if (exp.empty()) throw std::invalid_argument("config: missing 'experiment'");

    static const std::set<std::string> common{"experiment", "out", "threads", "seed"};
    auto check_keys = [&cfg](const std::set<std::string>& allowed) {
        for (const auto& [k, v] : cfg) {
            if (common.count(k) || allowed.count(k)) continue;
            throw std::invalid_argument("config: unknown key '" + k + "'");
        }
    };

    const long long threads = cfg_int(cfg, "threads", -1);
    if (threads >= 0) set_worker_count(static_cast<int>(threads));
    const std::string out = cfg_str(cfg, "out", "");

    if (exp == "gk" || exp == "vacf") {
        check_keys({"ensemble", "particles", "nq", "np", "nxi", "v0", "mass", "eps", "t0",
                    "qmass", "nf", "nsigma_p", "nsigma_xi", "dt", "steps", "stride", "flux_dof",
                    "manc", "budget", "md_traj", "md_steps", "md_multi_origin", "plateau_lo",
                    "plateau_hi"});
        GkParams p;
        const std::string ens = cfg_str(cfg, "ensemble", "nve");
        if (ens == "nvt")
            p.ensemble = Ensemble::NVT;
        else if (ens == "nve")
            p.ensemble = Ensemble::NVE;
        else
            throw std::invalid_argument("config: ensemble must be nve or nvt");
        p.n_particles = static_cast<int>(cfg_int(cfg, "particles", p.n_particles));
        p.n_q = static_cast<int>(cfg_int(cfg, "nq", p.n_q));
        p.n_p = static_cast<int>(cfg_int(cfg, "np", p.n_p));
        p.n_xi = static_cast<int>(cfg_int(cfg, "nxi", p.n_xi));
        p.v0 = cfg_double(cfg, "v0", p.v0);
        p.mass = cfg_double(cfg, "mass", p.mass);
        p.eps = cfg_double(cfg, "eps", p.eps);
        p.t0 = cfg_double(cfg, "t0", p.t0);
        p.q_mass = cfg_double(cfg, "qmass", p.q_mass);
        p.n_f = static_cast<int>(cfg_int(cfg, "nf", p.n_f));
        p.n_sigma_p = cfg_double(cfg, "nsigma_p", p.n_sigma_p);
        p.n_sigma_xi = cfg_double(cfg, "nsigma_xi", p.n_sigma_xi);
        p.dt = cfg_double(cfg, "dt", p.dt);
        p.n_steps = static_cast<int>(cfg_int(cfg, "steps", p.n_steps));
        p.record_stride = static_cast<int>(cfg_int(cfg, "stride", p.record_stride));
        p.flux_dof = static_cast<int>(cfg_int(cfg, "flux_dof", p.flux_dof));
        if (cfg.count("manc")) p.m_ancs = parse_int_list(cfg.at("manc"));
        if (exp == "vacf") p.m_ancs.clear();
        p.budget = cfg_int(cfg, "budget", p.budget);
        p.seed = static_cast<std::uint64_t>(cfg_int(cfg, "seed", 1));
        p.md_traj = static_cast<int>(cfg_int(cfg, "md_traj", p.md_traj));
        p.md_steps = static_cast<int>(cfg_int(cfg, "md_steps", p.md_steps));
        p.md_multi_origin = cfg_bool(cfg, "md_multi_origin", p.md_multi_origin);
        p.plateau_lo = cfg_double(cfg, "plateau_lo", p.plateau_lo);
        p.plateau_hi = cfg_double(cfg, "plateau_hi", p.plateau_hi);
        p.out = out;
        run_gk(p);
        return 0;
    }
    if (exp == "qpe") {
        check_keys({"nq", "np", "manc", "dt", "v0", "mass", "t0", "nsigma_p", "budget"});
        QpeParams p;
        p.n_q = static_cast<int>(cfg_int(cfg, "nq", p.n_q));
        p.n_p = static_cast<int>(cfg_int(cfg, "np", p.n_p));
        p.m_anc = static_cast<int>(cfg_int(cfg, "manc", p.m_anc));
        p.dt = cfg_double(cfg, "dt", p.dt);
        p.v0 = cfg_double(cfg, "v0", p.v0);
        p.mass = cfg_double(cfg, "mass", p.mass);
        p.t0 = cfg_double(cfg, "t0", p.t0);
        p.n_sigma_p = cfg_double(cfg, "nsigma_p", p.n_sigma_p);
        p.budget = cfg_int(cfg, "budget", p.budget);
        p.out = out;
        run_qpe(p);
        return 0;
    }
    if (exp == "mlae") {
        check_keys({"amplitude", "min_stages", "max_stages", "shots", "reps", "slope_stages",
                    "naive_shots"});
        MlaeParams p;
        p.amplitude = cfg_double(cfg, "amplitude", p.amplitude);
        p.min_stages = static_cast<int>(cfg_int(cfg, "min_stages", p.min_stages));
        p.max_stages = static_cast<int>(cfg_int(cfg, "max_stages", p.max_stages));
        p.shots = cfg_int(cfg, "shots", p.shots);
        p.n_rep = static_cast<int>(cfg_int(cfg, "reps", p.n_rep));
        p.slope_stages = static_cast<int>(cfg_int(cfg, "slope_stages", p.slope_stages));
        if (cfg.count("naive_shots")) p.naive_shots = parse_ll_list(cfg.at("naive_shots"));
        p.seed = static_cast<std::uint64_t>(cfg_int(cfg, "seed", 7));
        p.out = out;
        run_mlae_scaling(p);
        return 0;
    }
    if (exp == "resources") {
        check_keys({"n_totals", "n_ps", "nxi", "ndof", "qsd_c1", "qsp", "qsp_np", "qsp_nxi",
                    "qsp_eps", "qsp_dt"});
        ResourceParams p;
        if (cfg.count("n_totals")) p.n_totals = parse_int_list(cfg.at("n_totals"));
        if (cfg.count("n_ps")) p.n_ps = parse_int_list(cfg.at("n_ps"));
        p.n_xi = static_cast<int>(cfg_int(cfg, "nxi", p.n_xi));
        p.n_dof = static_cast<int>(cfg_int(cfg, "ndof", p.n_dof));
        p.qsd_c1 = cfg_double(cfg, "qsd_c1", p.qsd_c1);
        p.qsp = cfg_bool(cfg, "qsp", p.qsp);
        p.qsp_np = static_cast<int>(cfg_int(cfg, "qsp_np", p.qsp_np));
        p.qsp_nxi = static_cast<int>(cfg_int(cfg, "qsp_nxi", p.qsp_nxi));
        p.qsp_eps = cfg_double(cfg, "qsp_eps", p.qsp_eps);
        p.qsp_dt = cfg_double(cfg, "qsp_dt", p.qsp_dt);
        p.out = out;
        run_resources(p);
        return 0;
    }
    if (exp == "stability") {
        check_keys({"t_sim", "nsigmas", "dts", "np", "nxi", "nq", "stride", "v0", "mass", "t0",
                    "qmass", "nf"});
        StabilityParams p;
        p.v0 = cfg_double(cfg, "v0", p.v0);
        p.mass = cfg_double(cfg, "mass", p.mass);
        p.t0 = cfg_double(cfg, "t0", p.t0);
        p.q_mass = cfg_double(cfg, "qmass", p.q_mass);
        p.n_f = static_cast<int>(cfg_int(cfg, "nf", p.n_f));
        const double t_sim = cfg_double(cfg, "t_sim", 60.0);
        if (cfg.count("nsigmas") || cfg.count("dts")) {
            const std::vector<double> nss =
                cfg.count("nsigmas") ? parse_double_list(cfg.at("nsigmas"))
                                     : std::vector<double>{3.0, 4.0, 5.0};
            const std::vector<double> dts = cfg.count("dts") ? parse_double_list(cfg.at("dts"))
                                                             : std::vector<double>{0.01};
            StabilityCase base;
            base.t_sim = t_sim;
            base.n_q = static_cast<int>(cfg_int(cfg, "nq", base.n_q));
            base.n_p = static_cast<int>(cfg_int(cfg, "np", base.n_p));
            base.n_xi = static_cast<int>(cfg_int(cfg, "nxi", base.n_xi));
            base.record_stride = static_cast<int>(cfg_int(cfg, "stride", base.record_stride));
            for (double ns : nss)
                for (double dt : dts) {
                    StabilityCase c = base;
                    c.n_sigma_p = ns;
                    c.n_sigma_xi = ns;
                    c.dt = dt;
                    c.scan_param = ns;
                    p.cases.push_back(c);
                }
        } else {
            p.cases = default_stability_cases(t_sim);
        }
        p.out = out;
        run_stability(p);
        return 0;
    }
    if (exp == "validate") {
        check_keys({});
        const auto checks = run_validate();
        bool all = true;
        for (const auto& c : checks) {
            std::printf("%-26s %s  (%s)\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                        c.detail.c_str());
            all = all && c.pass;
        }
        return all ? 0 : 1;
    }
    throw std::invalid_argument("config: unknown experiment '" + exp + "'");
}

}  // namespace kvnmd
