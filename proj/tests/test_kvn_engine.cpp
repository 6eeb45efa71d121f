#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/phase_space.hpp"
#include "kvnmd/potential.hpp"
#include "kvnmd/rng.hpp"

using kvnmd::AxisSpec;
using kvnmd::Complex;
using kvnmd::Ensemble;
using kvnmd::KvnState;
using kvnmd::PhaseGrid;
using kvnmd::PotentialModel;
using kvnmd::StepConfig;

namespace {

KvnState gaussian_packet(const PhaseGrid& g, double q0, double p0, double sq, double sp) {
    KvnState s{g, Eigen::VectorXcd(g.total_dim())};
    const int qa = g.axis_index("q1");
    const int pa = g.axis_index("p1");
    for (Eigen::Index j = 0; j < g.total_dim(); ++j) {
        const double q = g.axis(qa).value(g.digit(j, qa));
        const double p = g.axis(pa).value(g.digit(j, pa));
        const double dq = q - q0, dp = p - p0;
        s.amp[j] = std::exp(-dq * dq / (4.0 * sq * sq) - dp * dp / (4.0 * sp * sp));
    }
    s.amp.normalize();
    return s;
}

PhaseGrid grid_1p(int nq_qubits, int np_qubits, double p_half) {
    return PhaseGrid({AxisSpec::binary("q1", true, nq_qubits, -M_PI, M_PI),
                      AxisSpec::binary("p1", false, np_qubits, -p_half, p_half)});
}

KvnState random_state(const PhaseGrid& g, std::uint64_t seed) {
    kvnmd::CounterRng rng(seed);
    KvnState s{g, Eigen::VectorXcd(g.total_dim())};
    for (Eigen::Index j = 0; j < g.total_dim(); ++j)
        s.amp[j] = Complex(rng.next_gaussian(), rng.next_gaussian());
    s.amp.normalize();
    return s;
}

}  // namespace

TEST_CASE("free propagation drifts a packet at its mean velocity") {
    const auto g = grid_1p(6, 5, 6.0);
    const auto model = PotentialModel::cosine(0.0);  // free particle
    StepConfig cfg;
    cfg.dt = 0.01;
    KvnState s = gaussian_packet(g, -1.0, 1.5, 0.3, 0.4);

    kvnmd::StepPlan plan(g, model, cfg);
    const int n_steps = 100;  // t = 1, mean q: -1 -> 0.5
    for (int i = 0; i < n_steps; ++i) plan.step(s);

    const double mean_q = kvnmd::expectation_axis(s, 0, [](double q) { return q; });
    const double mean_p = kvnmd::expectation_axis(s, 1, [](double p) { return p; });
    CHECK(std::abs(mean_q - 0.5) < 1e-6);
    CHECK(std::abs(mean_p - 1.5) < 1e-10);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
}

TEST_CASE("a uniform force accelerates the packet linearly") {
    // V = -f0*q via the tabulated model; mean p grows as f0*t while the
    // windows stay wide enough to ignore wrap effects.
    const double f0 = 0.7;
    const auto model = kvnmd::PotentialModel::tabulated(
        {1.0}, [f0](const std::vector<double>& q) { return -f0 * q[0]; },
        [f0](int, const std::vector<double>&) { return f0; });
    const auto g = grid_1p(6, 6, 8.0);
    StepConfig cfg;
    cfg.dt = 0.01;
    KvnState s = gaussian_packet(g, 0.0, -1.0, 0.3, 0.4);

    kvnmd::StepPlan plan(g, model, cfg);
    for (int i = 0; i < 100; ++i) plan.step(s);  // t = 1

    const double mean_p = kvnmd::expectation_axis(s, 1, [](double p) { return p; });
    CHECK(std::abs(mean_p - (-1.0 + f0)) < 1e-6);
}

TEST_CASE("norm is conserved over long runs in both ensembles") {
    StepConfig cfg;
    cfg.dt = 0.05;
    {
        const auto g = grid_1p(4, 4, 6.0);
        KvnState s = kvnmd::encode_canonical(g, PotentialModel::cosine(1.0), 1.0);
        kvnmd::StepPlan plan(g, PotentialModel::cosine(1.0), cfg);
        for (int i = 0; i < 1000; ++i) plan.step(s);
        CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    }
    {
        const auto g = PhaseGrid({AxisSpec::binary("q1", true, 4, -M_PI, M_PI),
                                  AxisSpec::binary("p1", false, 4, -6.0, 6.0),
                                  AxisSpec::binary("xi", false, 3, -5.0, 5.0)});
        cfg.ensemble = Ensemble::NVT;
        KvnState s = kvnmd::encode_canonical(g, PotentialModel::cosine(1.0), 1.0);
        kvnmd::StepPlan plan(g, PotentialModel::cosine(1.0), cfg);
        for (int i = 0; i < 1000; ++i) plan.step(s);
        CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("reversing the step sign undoes a stride exactly") {
    const auto model = PotentialModel::cosine(2.0);
    for (Ensemble ens : {Ensemble::NVE, Ensemble::NVT}) {
        std::vector<AxisSpec> axes{AxisSpec::binary("q1", true, 4, -M_PI, M_PI),
                                   AxisSpec::binary("p1", false, 4, -6.0, 6.0)};
        if (ens == Ensemble::NVT)
            axes.push_back(AxisSpec::binary("xi", false, 2, -4.0, 4.0));
        const PhaseGrid g(axes);
        KvnState s = kvnmd::encode_canonical(g, model, 1.0);
        const Eigen::VectorXcd start = s.amp;

        StepConfig fwd, bwd;
        fwd.dt = 0.05;
        bwd.dt = -0.05;
        fwd.ensemble = bwd.ensemble = ens;
        kvnmd::StepPlan pf(g, model, fwd), pb(g, model, bwd);
        for (int i = 0; i < 25; ++i) pf.step(s);
        for (int i = 0; i < 25; ++i) pb.step(s);
        CHECK((s.amp - start).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dense generators are Hermitian") {
    const auto model = PotentialModel::cosine(1.5);
    {
        const auto g = grid_1p(3, 3, 6.0);
        StepConfig cfg;
        const auto h = kvnmd::assemble_dense_generator(g, model, cfg);
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    }
    {
        const auto g = PhaseGrid({AxisSpec::binary("q1", true, 3, -M_PI, M_PI),
                                  AxisSpec::binary("p1", false, 3, -6.0, 6.0),
                                  AxisSpec::binary("xi", false, 2, -4.0, 4.0)});
        StepConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        const auto h = kvnmd::assemble_dense_generator(g, model, cfg);
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("the fast stride matches its dense matrix on random states") {
    const auto model = PotentialModel::cosine(1.2);
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 2, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 2, -5.0, 5.0),
                              AxisSpec::binary("xi", false, 2, -4.0, 4.0)});
    StepConfig cfg;
    cfg.dt = 0.07;
    cfg.ensemble = Ensemble::NVT;
    const Eigen::MatrixXcd u = kvnmd::dense_step_matrix(g, model, cfg);

    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    CHECK((u.adjoint() * u - id).cwiseAbs().maxCoeff() < 1e-12);

    kvnmd::StepPlan plan(g, model, cfg);
    for (std::uint64_t seed : {3u, 4u}) {
        KvnState s = random_state(g, seed);
        const Eigen::VectorXcd want = u * s.amp;
        plan.step(s);
        CHECK((s.amp - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the stride converges to the dense generator at second order") {
    // || U(dt) - exp(-i H dt) || ~ c * dt^3 per stride; halving dt must cut
    // the one-step defect by about 8.
    const auto model = PotentialModel::cosine(1.0);
    const auto g = grid_1p(3, 3, 5.0);
    StepConfig cfg;

    auto defect = [&](double dt) {
        cfg.dt = dt;
        const Eigen::MatrixXcd h = kvnmd::assemble_dense_generator(g, model, cfg);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXcd ph(h.rows());
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            ph[i] = std::exp(Complex(0.0, -dt * es.eigenvalues()[i]));
        const Eigen::MatrixXcd exact =
            es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        return (kvnmd::dense_step_matrix(g, model, cfg) - exact).cwiseAbs().maxCoeff();
    };

    const double e1 = defect(0.08), e2 = defect(0.04);
    const double ratio = e1 / e2;
    CHECK(ratio > 6.0);
    CHECK(ratio < 10.0);
}

TEST_CASE("dilation bond coefficients average adjacent momenta") {
    const auto ax = AxisSpec::binary("p1", false, 2, -2.0, 2.0);  // points -2,-1,0,1
    const auto blk = kvnmd::DilationBlock::build(ax);
    REQUIRE(blk.gamma.size() == 4);
    // dp = 1: bonds (p_j + p_{j+1})/4, the last one wrapping to p_0
    CHECK(blk.gamma[0] == doctest::Approx(-0.75));
    CHECK(blk.gamma[1] == doctest::Approx(-0.25));
    CHECK(blk.gamma[2] == doctest::Approx(0.25));
    CHECK(blk.gamma[3] == doctest::Approx(-0.25));

    const Eigen::MatrixXcd d = blk.matrix();
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    // spectral data reproduce the matrix
    const Eigen::MatrixXcd re = blk.vectors *
                                blk.values.cast<Complex>().asDiagonal() *
                                blk.vectors.adjoint();
    CHECK((d - re).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the dilation flow contracts momenta under positive friction") {
    // A packet at p0 = 2 pushed through exp(+i a D) with a = 0.1 should peak
    // near p0*exp(-a); the opposite sign inflates it instead.
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 1, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 7, -8.0, 8.0),
                              AxisSpec::sized("xi", false, 2, 0.5, 1.5)});
    const auto model = PotentialModel::cosine(1.0);
    StepConfig cfg;
    cfg.ensemble = Ensemble::NVT;

    KvnState s{g, Eigen::VectorXcd::Zero(g.total_dim())};
    const int pa = 1;
    for (Eigen::Index j = 0; j < g.total_dim(); ++j) {
        if (g.digit(j, 2) != 0) continue;  // populate only the xi = 0.5 slice
        const double p = g.axis(pa).value(g.digit(j, pa));
        s.amp[j] = std::exp(-(p - 2.0) * (p - 2.0) / (2.0 * 0.35 * 0.35));
    }
    s.amp.normalize();

    kvnmd::apply_dilation(s, model, cfg, 0.2);  // a = xi*dt = 0.1
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);

    const auto marg = kvnmd::reduced_distribution(s, {"p1"});
    int arg = 0;
    marg.values.maxCoeff(&arg);
    // refine the peak with a local quadratic fit
    const double y0 = marg.values[arg - 1], y1 = marg.values[arg], y2 = marg.values[arg + 1];
    const double frac = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    const double peak = g.axis(pa).value(arg) + frac * g.axis(pa).delta();
    CHECK(peak == doctest::Approx(2.0 * std::exp(-0.1)).epsilon(0.01));
}

TEST_CASE("the cached dilation update equals the dense matrix exponential") {
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 2, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 4, -6.0, 6.0),
                              AxisSpec::binary("xi", false, 2, -4.0, 4.0)});
    const auto model = PotentialModel::cosine(1.0);
    StepConfig cfg;
    cfg.dt = 0.06;
    cfg.ensemble = Ensemble::NVT;

    // dense reference: exp(+i (dt/2) xi D) per xi slice via the embedded
    // dilation operator and the diagonal xi coordinate
    const Eigen::MatrixXcd d = kvnmd::dense_dilation(g, 1);
    const auto xi_fun = kvnmd::tabulate(
        g, [](const std::vector<double>& c) { return c[2]; });
    const Eigen::MatrixXcd xi_diag = kvnmd::dense_diagonal(xi_fun);
    const Eigen::MatrixXcd gen = xi_diag * d;  // commuting factors
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Complex(0.0, 0.5 * cfg.dt) * gen);
    const Eigen::MatrixXcd expm = es.eigenvectors() *
                                  es.eigenvalues().array().exp().matrix().asDiagonal() *
                                  es.eigenvectors().inverse();

    KvnState s = random_state(g, 9);
    const Eigen::VectorXcd want = expm * s.amp;
    kvnmd::StepPlan plan(g, model, cfg);
    plan.dilation_half(s);
    CHECK((s.amp - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("thermostat advection moves probability along xi as the velocity mismatch dictates") {
    // With zero potential and a momentum eigenstate-like packet, the xi drift
    // rate is (p^2/m - n_f t0)/Q; track the xi mean over a short run.
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 1, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 6, -8.0, 8.0),
                              AxisSpec::binary("xi", false, 6, -8.0, 8.0)});
    const auto model = PotentialModel::cosine(0.0);
    StepConfig cfg;
    cfg.ensemble = Ensemble::NVT;
    cfg.t0 = 1.0;
    cfg.q_mass = 2.0;
    cfg.n_f = 1;

    KvnState s{g, Eigen::VectorXcd(g.total_dim())};
    const double p0 = 2.0, sp = 0.25, sx = 0.4;
    for (Eigen::Index j = 0; j < g.total_dim(); ++j) {
        const double p = g.axis(1).value(g.digit(j, 1));
        const double x = g.axis(2).value(g.digit(j, 2));
        s.amp[j] = std::exp(-(p - p0) * (p - p0) / (4.0 * sp * sp) - x * x / (4.0 * sx * sx));
    }
    s.amp.normalize();

    const double t = 0.2;
    kvnmd::apply_thermostat_advection(s, model, cfg, t);
    const double mean_xi = kvnmd::expectation_axis(s, 2, [](double x) { return x; });
    // (<p^2> - t0)/Q with <p^2> = p0^2 + sp^2
    const double want = t * (p0 * p0 + sp * sp - 1.0) / cfg.q_mass;
    CHECK(mean_xi == doctest::Approx(want).epsilon(0.01));
}

TEST_CASE("kinetic temperature of the canonical profile equals the bath setting") {
    const auto g = grid_1p(5, 6, 8.0);
    const auto model = PotentialModel::cosine(1.0);
    const KvnState s = kvnmd::encode_canonical(g, model, 1.0 / 1.3);
    CHECK(kvnmd::kinetic_temperature(s, model, 1) == doctest::Approx(1.3).epsilon(0.005));
}

TEST_CASE("sized axes propagate through the dense-transform fallback") {
    // 12-point position axis (not a power of two) must behave like the binary
    // path: norm conserved, drift accurate.
    const auto g = PhaseGrid({AxisSpec::sized("q1", true, 12, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 5, -6.0, 6.0)});
    const auto model = PotentialModel::cosine(0.0);
    StepConfig cfg;
    cfg.dt = 0.01;
    KvnState s = gaussian_packet(g, -1.0, 1.0, 0.45, 0.4);
    kvnmd::StepPlan plan(g, model, cfg);
    for (int i = 0; i < 50; ++i) plan.step(s);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    const double mean_q = kvnmd::expectation_axis(s, 0, [](double q) { return q; });
    CHECK(std::abs(mean_q - (-0.5)) < 1e-3);  // coarse axis, finite packet
}

TEST_CASE("two-particle strides conserve norm and stay reversible") {
    const auto model = PotentialModel::coupled_cosine(5.0, 1.2);
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 3, -M_PI, M_PI),
                              AxisSpec::binary("q2", true, 3, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 3, -6.0, 6.0),
                              AxisSpec::binary("p2", false, 3, -6.0, 6.0)});
    StepConfig cfg;
    cfg.dt = 0.02;
    KvnState s = kvnmd::encode_canonical(g, model, 1.0);
    const Eigen::VectorXcd start = s.amp;
    kvnmd::StepPlan plan(g, model, cfg);
    for (int i = 0; i < 50; ++i) plan.step(s);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);

    StepConfig back = cfg;
    back.dt = -cfg.dt;
    kvnmd::StepPlan pb(g, model, back);
    for (int i = 0; i < 50; ++i) pb.step(s);
    CHECK((s.amp - start).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dense oracle refuses oversized grids") {
    const auto g = grid_1p(7, 6, 6.0);  // 8192 amplitudes
    StepConfig cfg;
    CHECK_THROWS(kvnmd::assemble_dense_generator(g, PotentialModel::cosine(1.0), cfg));
}
