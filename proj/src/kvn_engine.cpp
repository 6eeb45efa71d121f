#include "kvnmd/kvn_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kvnmd/fft.hpp"
#include "kvnmd/parallel.hpp"

namespace kvnmd {

namespace {

void transform_axis(KvnState& s, int ax, bool inverse) {
    const AxisSpec& a = s.grid.axis(ax);
    const Eigen::Index stride = s.grid.stride(ax);
    const Eigen::Index outer = s.grid.total_dim() / (static_cast<Eigen::Index>(a.n) * stride);
    fft_axis(s.amp.data(), a.n, stride, outer, inverse);
}

void transform_axes(KvnState& s, const std::vector<int>& axes, bool inverse) {
    for (int ax : axes) transform_axis(s, ax, inverse);
}

// Column base addresses of every momentum fiber, grouped by the thermostat
// grid index of the fiber.
std::vector<std::vector<Eigen::Index>> fiber_columns_by_xi(const PhaseGrid& grid, int p_ax,
                                                           int xi_ax) {
    const Eigen::Index sp = grid.stride(p_ax);
    const int np = grid.axis(p_ax).n;
    const Eigen::Index sx = grid.stride(xi_ax);
    const int nx = grid.axis(xi_ax).n;
    std::vector<std::vector<Eigen::Index>> cols(nx);
    const Eigen::Index slab = sp * np;
    for (Eigen::Index o = 0; o < grid.total_dim() / slab; ++o)
        for (Eigen::Index r = 0; r < sp; ++r) {
            const Eigen::Index base = o * slab + r;
            const int jx = static_cast<int>((base / sx) % nx);
            cols[jx].push_back(base);
        }
    return cols;
}

}  // namespace

Eigen::MatrixXcd DilationBlock::matrix() const {
    // Centered-difference realization of -i(p d/dp + 1/2): with this sign,
    // exp(+i dt xi D) pushes a packet at p0 to p0 exp(-xi dt), i.e. a positive
    // friction variable damps momenta.  The opposite ket order looks natural
    // on paper but generates the inverse flow.
    const int n = static_cast<int>(gamma.size());
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
    const Complex mi(0.0, -1.0);
    for (int j = 0; j < n; ++j) {
        const int jn = (j + 1) % n;
        d(jn, j) -= mi * gamma[j];
        d(j, jn) += mi * gamma[j];
    }
    return d;
}

DilationBlock DilationBlock::build(const AxisSpec& p_axis) {
    const int n = p_axis.n;
    if (n < 2) throw std::invalid_argument("DilationBlock: axis too small");
    DilationBlock b;
    b.gamma.resize(n);
    const double dp = p_axis.delta();
    for (int j = 0; j < n; ++j) {
        const int jn = (j + 1) % n;
        b.gamma[j] = (p_axis.value(j) + p_axis.value(jn)) / (4.0 * dp);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b.matrix());
    if (es.info() != Eigen::Success) throw std::runtime_error("DilationBlock: eigensolve failed");
    b.vectors = es.eigenvectors();
    b.values = es.eigenvalues();
    return b;
}

StepPlan::StepPlan(const PhaseGrid& grid, const PotentialModel& model, const StepConfig& cfg)
    : grid_(grid), model_(model), cfg_(cfg) {
    q_axes_ = grid_.q_axes();
    p_axes_ = grid_.p_axes();
    xi_axis_ = grid_.xi_axis();
    const int nf = model_.n_dof();
    if (static_cast<int>(q_axes_.size()) != nf || static_cast<int>(p_axes_.size()) != nf)
        throw std::invalid_argument("StepPlan: grid does not match the model's dof count");
    if (cfg_.ensemble == Ensemble::NVT && xi_axis_ < 0)
        throw std::invalid_argument("StepPlan: NVT requires a xi axis");
    if (cfg_.dt == 0.0) throw std::invalid_argument("StepPlan: dt must be nonzero");

    const double dt = cfg_.dt;
    for (int i = 0; i < nf; ++i) drift_tables_.push_back(drift_pair_table(i, 0.5 * dt));
    if (cfg_.ensemble == Ensemble::NVE) {
        for (int i = 0; i < nf; ++i) kick_tables_full_.push_back(kick_table(i, dt));
    } else {
        for (int i = 0; i < nf; ++i) kick_tables_half_.push_back(kick_table(i, 0.5 * dt));
        advection_table_full_ = advection_table(dt);
        for (int i = 0; i < nf; ++i) dilation_half_.push_back(dilation_matrices(i, 0.5 * dt));
        for (int i = 0; i < nf; ++i)
            dilation_cols_.push_back(fiber_columns_by_xi(grid_, p_axes_[i], xi_axis_));
    }
}

StepPlan::Table StepPlan::drift_pair_table(int dof, double dt_part) const {
    const int qa = q_axes_[dof], pa = p_axes_[dof];
    const Eigen::VectorXd k = wavenumbers(grid_.axis(qa));
    const Eigen::VectorXd pv = axis_values(grid_.axis(pa));
    const double m = model_.masses[dof];
    Table t;
    t.axes = {std::min(qa, pa), std::max(qa, pa)};
    t.dims = {grid_.axis(t.axes[0]).n, grid_.axis(t.axes[1]).n};
    t.phase.resize(t.dims[0] * t.dims[1]);
    const bool q_first = qa < pa;
    for (Eigen::Index j0 = 0; j0 < t.dims[0]; ++j0)
        for (Eigen::Index j1 = 0; j1 < t.dims[1]; ++j1) {
            const double kv = q_first ? k[j0] : k[j1];
            const double p = q_first ? pv[j1] : pv[j0];
            const double a = -dt_part * p * kv / m;
            t.phase[j0 * t.dims[1] + j1] = Complex(std::cos(a), std::sin(a));
        }
    return t;
}

StepPlan::Table StepPlan::kick_table(int dof, double dt_part) const {
    const int pa = p_axes_[dof];
    const Eigen::VectorXd k = wavenumbers(grid_.axis(pa));
    Table t;
    t.axes = q_axes_;
    t.axes.push_back(pa);
    std::sort(t.axes.begin(), t.axes.end());
    Eigen::Index size = 1;
    for (int ax : t.axes) {
        t.dims.push_back(grid_.axis(ax).n);
        size *= grid_.axis(ax).n;
    }
    t.phase.resize(size);
    // walk the table's own odometer
    const int tr = static_cast<int>(t.axes.size());
    std::vector<int> digits(tr, 0);
    std::vector<double> qv(q_axes_.size());
    int p_slot = 0;
    for (int i = 0; i < tr; ++i)
        if (t.axes[i] == pa) p_slot = i;
    std::vector<int> q_slot(q_axes_.size());
    for (std::size_t i = 0; i < q_axes_.size(); ++i)
        for (int j = 0; j < tr; ++j)
            if (t.axes[j] == q_axes_[i]) q_slot[i] = j;
    for (Eigen::Index flat = 0; flat < size; ++flat) {
        for (std::size_t i = 0; i < q_axes_.size(); ++i)
            qv[i] = grid_.axis(q_axes_[i]).value(digits[q_slot[i]]);
        const double f = model_.force(dof, qv);
        const double a = -dt_part * f * k[digits[p_slot]];
        t.phase[flat] = Complex(std::cos(a), std::sin(a));
        for (int ax = tr - 1; ax >= 0; --ax) {
            if (++digits[ax] < t.dims[ax]) break;
            digits[ax] = 0;
        }
    }
    return t;
}

StepPlan::Table StepPlan::advection_table(double dt_part) const {
    const Eigen::VectorXd k = wavenumbers(grid_.axis(xi_axis_));
    Table t;
    t.axes = p_axes_;
    t.axes.push_back(xi_axis_);
    std::sort(t.axes.begin(), t.axes.end());
    Eigen::Index size = 1;
    for (int ax : t.axes) {
        t.dims.push_back(grid_.axis(ax).n);
        size *= grid_.axis(ax).n;
    }
    t.phase.resize(size);
    const int tr = static_cast<int>(t.axes.size());
    std::vector<int> digits(tr, 0);
    int xi_slot = 0;
    for (int i = 0; i < tr; ++i)
        if (t.axes[i] == xi_axis_) xi_slot = i;
    std::vector<int> p_slot(p_axes_.size());
    for (std::size_t i = 0; i < p_axes_.size(); ++i)
        for (int j = 0; j < tr; ++j)
            if (t.axes[j] == p_axes_[i]) p_slot[i] = j;
    for (Eigen::Index flat = 0; flat < size; ++flat) {
        double twice_ke = 0.0;
        for (std::size_t i = 0; i < p_axes_.size(); ++i) {
            const double p = grid_.axis(p_axes_[i]).value(digits[p_slot[i]]);
            twice_ke += p * p / model_.masses[i];
        }
        const double gen = (twice_ke - cfg_.n_f * cfg_.t0) / cfg_.q_mass;
        const double a = -dt_part * gen * k[digits[xi_slot]];
        t.phase[flat] = Complex(std::cos(a), std::sin(a));
        for (int ax = tr - 1; ax >= 0; --ax) {
            if (++digits[ax] < t.dims[ax]) break;
            digits[ax] = 0;
        }
    }
    return t;
}

std::vector<Eigen::MatrixXcd> StepPlan::dilation_matrices(int dof, double dt_part) const {
    const DilationBlock block = DilationBlock::build(grid_.axis(p_axes_[dof]));
    const AxisSpec& xi = grid_.axis(xi_axis_);
    std::vector<Eigen::MatrixXcd> w;
    w.reserve(xi.n);
    const Eigen::Index np = block.values.size();
    for (int j = 0; j < xi.n; ++j) {
        const double x = xi.value(j);
        Eigen::VectorXcd ph(np);
        for (Eigen::Index e = 0; e < np; ++e) {
            const double a = dt_part * x * block.values[e];  // exp(+i dt xi D)
            ph[e] = Complex(std::cos(a), std::sin(a));
        }
        w.emplace_back(block.vectors * ph.asDiagonal() * block.vectors.adjoint());
    }
    return w;
}

void StepPlan::apply_table(KvnState& state, const Table& t) const {
    const PhaseGrid& g = state.grid;
    const int rank = g.rank();
    // Table stride per grid axis (0 when the axis is not in the table).
    std::vector<Eigen::Index> tstride(rank, 0);
    {
        Eigen::Index s = 1;
        for (int i = static_cast<int>(t.axes.size()) - 1; i >= 0; --i) {
            tstride[t.axes[i]] = s;
            s *= t.dims[i];
        }
    }
    Complex* amp = state.amp.data();
    const Complex* phase = t.phase.data();

    // Recursive walk; the innermost axis has unit stride in both the state and
    // (when present) the table, so the hot loops are contiguous.
    auto rec = [&](auto&& self, int ax, Eigen::Index base, Eigen::Index toff) -> void {
        const int n = g.axis(ax).n;
        const Eigen::Index s = g.stride(ax);
        const Eigen::Index ts = tstride[ax];
        if (ax == rank - 1) {
            Complex* a = amp + base;
            if (ts != 0) {
                const Complex* ph = phase + toff;
                for (int j = 0; j < n; ++j) a[j] *= ph[j];
            } else {
                const Complex c = phase[toff];
                for (int j = 0; j < n; ++j) a[j] *= c;
            }
            return;
        }
        for (int j = 0; j < n; ++j) self(self, ax + 1, base + j * s, toff + j * ts);
    };

    if (rank == 1) {
        for (Eigen::Index j = 0; j < g.total_dim(); ++j) amp[j] *= phase[j * tstride[0]];
        return;
    }
    const int n0 = g.axis(0).n;
    parallel_for_blocks(static_cast<std::size_t>(n0), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j)
            rec(rec, 1, static_cast<Eigen::Index>(j) * g.stride(0),
                static_cast<Eigen::Index>(j) * tstride[0]);
    });
}

void StepPlan::apply_dilation_matrices(KvnState& state, int dof,
                                       const std::vector<Eigen::MatrixXcd>& w) const {
    const int pa = p_axes_[dof];
    const Eigen::Index sp = grid_.stride(pa);
    const int np = grid_.axis(pa).n;
    const auto& cols_by_xi = dilation_cols_[dof];
    constexpr Eigen::Index kTile = 64;
    Complex* amp = state.amp.data();

    parallel_for(cols_by_xi.size(), [&](std::size_t jx) {
        const auto& cols = cols_by_xi[jx];
        const Eigen::MatrixXcd& wm = w[jx];
        Eigen::MatrixXcd tile(np, kTile), prod(np, kTile);
        for (std::size_t c0 = 0; c0 < cols.size(); c0 += kTile) {
            const Eigen::Index wcount =
                std::min<Eigen::Index>(kTile, static_cast<Eigen::Index>(cols.size() - c0));
            for (Eigen::Index c = 0; c < wcount; ++c) {
                const Eigen::Index base = cols[c0 + c];
                for (int jp = 0; jp < np; ++jp) tile(jp, c) = amp[base + jp * sp];
            }
            prod.leftCols(wcount).noalias() = wm * tile.leftCols(wcount);
            for (Eigen::Index c = 0; c < wcount; ++c) {
                const Eigen::Index base = cols[c0 + c];
                for (int jp = 0; jp < np; ++jp) amp[base + jp * sp] = prod(jp, c);
            }
        }
    });
}

void StepPlan::drift(KvnState& state) const {
    transform_axes(state, q_axes_, false);
    for (const auto& t : drift_tables_) apply_table(state, t);
    transform_axes(state, q_axes_, true);
}

void StepPlan::kick_full(KvnState& state) const {
    transform_axes(state, p_axes_, false);
    for (const auto& t : kick_tables_full_) apply_table(state, t);
    transform_axes(state, p_axes_, true);
}

void StepPlan::kick_half(KvnState& state) const {
    transform_axes(state, p_axes_, false);
    for (const auto& t : kick_tables_half_) apply_table(state, t);
    transform_axes(state, p_axes_, true);
}

void StepPlan::dilation_half(KvnState& state) const {
    for (int i = 0; i < model_.n_dof(); ++i) apply_dilation_matrices(state, i, dilation_half_[i]);
}

void StepPlan::advection_full(KvnState& state) const {
    transform_axis(state, xi_axis_, false);
    apply_table(state, advection_table_full_);
    transform_axis(state, xi_axis_, true);
}

void StepPlan::step(KvnState& state) const {
    if (!(state.grid == grid_)) throw std::invalid_argument("StepPlan::step: grid mismatch");
    if (cfg_.ensemble == Ensemble::NVE) {
        drift(state);
        kick_full(state);
        drift(state);
    } else {
        drift(state);
        kick_half(state);
        dilation_half(state);
        advection_full(state);
        dilation_half(state);
        kick_half(state);
        drift(state);
    }
}

// -- free functions ----------------------------------------------------------

void apply_drift_half(KvnState& state, const PotentialModel& model, const StepConfig& cfg) {
    StepPlan plan(state.grid, model, StepConfig{cfg.dt, Ensemble::NVE, cfg.t0, cfg.q_mass, cfg.n_f});
    plan.drift(state);
}

void apply_kick(KvnState& state, const PotentialModel& model, const StepConfig& cfg) {
    StepPlan plan(state.grid, model, StepConfig{cfg.dt, Ensemble::NVE, cfg.t0, cfg.q_mass, cfg.n_f});
    plan.kick_full(state);
}

void apply_dilation(KvnState& state, const PotentialModel& model, const StepConfig& cfg,
                    double dt) {
    StepConfig c = cfg;
    c.dt = 2.0 * dt;  // plan holds dilation at dt/2
    c.ensemble = Ensemble::NVT;
    StepPlan plan(state.grid, model, c);
    plan.dilation_half(state);
}

void apply_thermostat_advection(KvnState& state, const PotentialModel& model,
                                const StepConfig& cfg, double dt) {
    StepConfig c = cfg;
    c.dt = dt;
    c.ensemble = Ensemble::NVT;
    StepPlan plan(state.grid, model, c);
    plan.advection_full(state);
}

void step(KvnState& state, const PotentialModel& model, const StepConfig& cfg) {
    StepPlan plan(state.grid, model, cfg);
    plan.step(state);
}

double kinetic_temperature(const KvnState& state, const PotentialModel& model, int n_f) {
    const auto ps = state.grid.p_axes();
    if (ps.empty()) throw std::invalid_argument("kinetic_temperature: no momentum axes");
    double acc = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double m = model.masses.at(i);
        acc += expectation_axis(state, ps[i], [m](double p) { return p * p / m; });
    }
    return acc / n_f;
}

}  // namespace kvnmd
