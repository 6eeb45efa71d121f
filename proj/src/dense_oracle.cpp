#include <cmath>
#include <stdexcept>

#include "kvnmd/kvn_engine.hpp"

namespace kvnmd {

namespace {

constexpr Eigen::Index kDenseGuard = 4096;

void check_dense(const PhaseGrid& grid, const char* who) {
    if (grid.total_dim() > kDenseGuard)
        throw std::invalid_argument(std::string(who) + ": grid exceeds the dense-oracle guard of " +
                                    std::to_string(kDenseGuard) + " amplitudes");
}

// I_pre (x) op (x) I_post for the given axis.
Eigen::MatrixXcd embed(const PhaseGrid& grid, int ax, const Eigen::MatrixXcd& op) {
    const Eigen::Index total = grid.total_dim();
    const Eigen::Index post = grid.stride(ax);
    const int n = grid.axis(ax).n;
    const Eigen::Index pre = total / (post * n);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(total, total);
    for (Eigen::Index a = 0; a < pre; ++a)
        for (int jr = 0; jr < n; ++jr)
            for (int jc = 0; jc < n; ++jc) {
                const Complex v = op(jr, jc);
                if (v == Complex(0.0, 0.0)) continue;
                const Eigen::Index rbase = a * n * post + jr * post;
                const Eigen::Index cbase = a * n * post + jc * post;
                for (Eigen::Index b = 0; b < post; ++b) m(rbase + b, cbase + b) = v;
            }
    return m;
}

// Unitary DFT matrix matching the fast transforms' forward convention.
Eigen::MatrixXcd dft(int n) {
    Eigen::MatrixXcd f(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const long long m = (static_cast<long long>(r) * c) % n;
            const double a = -2.0 * M_PI * static_cast<double>(m) / n;
            f(r, c) = s * Complex(std::cos(a), std::sin(a));
        }
    return f;
}

// Row scaling by a per-axis value profile v(axis digit): diag(v) * m.
void scale_rows_by_axis(const PhaseGrid& grid, int ax, const Eigen::VectorXd& v,
                        Eigen::MatrixXcd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) *= v[grid.digit(r, ax)];
}

}  // namespace

Eigen::MatrixXcd dense_lambda(const PhaseGrid& grid, int ax) {
    check_dense(grid, "dense_lambda");
    const int n = grid.axis(ax).n;
    const Eigen::MatrixXcd f = dft(n);
    const Eigen::VectorXd k = wavenumbers(grid.axis(ax));
    Eigen::MatrixXcd local = f.adjoint() * k.asDiagonal().toDenseMatrix().cast<Complex>() * f;
    return embed(grid, ax, local);
}

Eigen::MatrixXcd dense_dilation(const PhaseGrid& grid, int ax) {
    check_dense(grid, "dense_dilation");
    return embed(grid, ax, DilationBlock::build(grid.axis(ax)).matrix());
}

Eigen::MatrixXcd dense_diagonal(const GridFunction& f) {
    check_dense(f.grid, "dense_diagonal");
    return f.values.cast<Complex>().asDiagonal();
}

Eigen::MatrixXcd assemble_dense_generator(const PhaseGrid& grid, const PotentialModel& model,
                                          const StepConfig& cfg) {
    check_dense(grid, "assemble_dense_generator");
    const auto qs = grid.q_axes();
    const auto ps = grid.p_axes();
    if (qs.size() != ps.size() || static_cast<int>(qs.size()) != model.n_dof())
        throw std::invalid_argument("assemble_dense_generator: grid/model mismatch");
    const Eigen::Index total = grid.total_dim();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(total, total);

    // Streaming term: (p_i/m_i) lambda_{q_i}
    for (std::size_t i = 0; i < qs.size(); ++i) {
        Eigen::MatrixXcd t = dense_lambda(grid, qs[i]);
        Eigen::VectorXd pv = axis_values(grid.axis(ps[i])) / model.masses[i];
        scale_rows_by_axis(grid, ps[i], pv, t);
        h += t;
    }
    // Force term: F_i(q) lambda_{p_i}
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Eigen::MatrixXcd t = dense_lambda(grid, ps[i]);
        std::vector<double> qv(qs.size());
        for (Eigen::Index r = 0; r < total; ++r) {
            for (std::size_t a = 0; a < qs.size(); ++a)
                qv[a] = grid.axis(qs[a]).value(grid.digit(r, qs[a]));
            t.row(r) *= model.force(static_cast<int>(i), qv);
        }
        h += t;
    }
    if (cfg.ensemble == Ensemble::NVT) {
        const int xa = grid.xi_axis();
        if (xa < 0) throw std::invalid_argument("assemble_dense_generator: NVT needs a xi axis");
        // Thermostat coupling: -xi (x) sum_i D_{p_i}
        for (std::size_t i = 0; i < ps.size(); ++i) {
            Eigen::MatrixXcd t = dense_dilation(grid, ps[i]);
            scale_rows_by_axis(grid, xa, -axis_values(grid.axis(xa)), t);
            h += t;
        }
        // Thermostat advection: ((sum_i p_i^2/m_i - n_f t0)/Q) lambda_xi
        Eigen::MatrixXcd t = dense_lambda(grid, xa);
        for (Eigen::Index r = 0; r < total; ++r) {
            double twice_ke = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const double p = grid.axis(ps[i]).value(grid.digit(r, ps[i]));
                twice_ke += p * p / model.masses[i];
            }
            t.row(r) *= (twice_ke - cfg.n_f * cfg.t0) / cfg.q_mass;
        }
        h += t;
    }
    return h;
}

Eigen::MatrixXcd dense_step_matrix(const PhaseGrid& grid, const PotentialModel& model,
                                   const StepConfig& cfg) {
    check_dense(grid, "dense_step_matrix");
    const Eigen::Index total = grid.total_dim();
    StepPlan plan(grid, model, cfg);
    Eigen::MatrixXcd u(total, total);
    KvnState s{grid, Eigen::VectorXcd(total)};
    for (Eigen::Index c = 0; c < total; ++c) {
        s.amp.setZero();
        s.amp[c] = 1.0;
        plan.step(s);
        u.col(c) = s.amp;
    }
    return u;
}

}  // namespace kvnmd
