#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "kvnmd/errors.hpp"
#include "kvnmd/greenkubo.hpp"
#include "kvnmd/kvn_engine.hpp"
#include "kvnmd/phase_space.hpp"
#include "kvnmd/potential.hpp"

using kvnmd::AxisSpec;
using kvnmd::BartlettReadout;
using kvnmd::Complex;
using kvnmd::CorrelationSeries;
using kvnmd::KvnState;
using kvnmd::PhaseGrid;
using kvnmd::PotentialModel;
using kvnmd::StepConfig;

namespace {

CorrelationSeries exponential_series(double dt, int n, double c0, double tau_c) {
    CorrelationSeries s;
    s.dt = dt;
    s.c0 = c0;
    s.c.resize(n);
    for (int k = 0; k < n; ++k) s.c[k] = std::exp(-dt * k / tau_c);
    return s;
}

// quadratic-time reference for the zero-bin weight
double p0_direct(const CorrelationSeries& s, long long k) {
    double acc = static_cast<double>(k);
    for (long long d = 1; d < k; ++d) acc += 2.0 * (k - d) * s.c[static_cast<std::size_t>(d)];
    return acc / (static_cast<double>(k) * static_cast<double>(k));
}

}  // namespace

TEST_CASE("flux excitation returns the thermal velocity variance") {
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 5, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 6, -8.0, 8.0)});
    const auto model = PotentialModel::cosine(1.0, 2.0);  // mass 2
    const double t0 = 1.3;
    KvnState s = kvnmd::encode_canonical(g, model, 1.0 / t0);
    const double c0 = kvnmd::flux_excite(s, model, 0);
    CHECK(c0 == doctest::Approx(t0 / 2.0).epsilon(0.005));  // <v^2> = t0/m
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);

    CHECK_THROWS(kvnmd::flux_excite(s, model, 1));
}

TEST_CASE("flux excitation picks a single velocity component") {
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 2, -M_PI, M_PI),
                              AxisSpec::binary("q2", true, 2, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 4, -6.0, 6.0),
                              AxisSpec::binary("p2", false, 4, -6.0, 6.0)});
    const auto model = PotentialModel::coupled_cosine(5.0, 1.2);
    KvnState s = kvnmd::encode_canonical(g, model, 1.0);
    const KvnState eq = s;
    const double c0 = kvnmd::flux_excite(s, model, 1);
    CHECK(c0 == doctest::Approx(1.0).epsilon(0.01));

    // amplitudes must be rescaled by p2 alone: ratio independent of p1
    const int p2 = g.axis_index("p2");
    for (Eigen::Index j = 0; j < g.total_dim(); ++j) {
        const double v = g.axis(p2).value(g.digit(j, p2));
        if (std::abs(v) < 1e-12 || std::abs(eq.amp[j]) < 1e-14) continue;
        const double ratio = (s.amp[j] / eq.amp[j]).real();
        CHECK(ratio / v == doctest::Approx((s.amp[0] / eq.amp[0]).real() /
                                           g.axis(p2).value(g.digit(Eigen::Index{0}, p2)))
                               .epsilon(1e-9));
    }
}

TEST_CASE("zero-bin weight matches the direct double sum") {
    const auto s = exponential_series(0.05, 600, 2.0, 1.7);
    for (long long k : {2LL, 16LL, 128LL, 512LL}) {
        CHECK(kvnmd::p0_bartlett(s, k) == doctest::Approx(p0_direct(s, k)).epsilon(1e-12));
    }
    CHECK_THROWS(kvnmd::p0_bartlett(s, 601));  // needs K lags
    CHECK_THROWS(kvnmd::p0_bartlett(s, 0));
}

TEST_CASE("readout identity reproduces the exponential transport value") {
    // For c(t) = c0 exp(-t/tau_c) the triangular window gives exactly
    // c0 tau_c (1 - tau_c/tau) up to O(dt^2) quadrature terms.
    const double c0 = 2.0, tau_c = 1.0, dt = 0.005;
    const auto s = exponential_series(dt, 1 << 15, c0, tau_c);
    const auto r = kvnmd::d_bartlett(s, 14);  // tau = 16384*0.005 = 81.92
    CHECK(r.k == 16384);
    CHECK(r.tau == doctest::Approx(16384 * dt));
    const double want = c0 * tau_c * (1.0 - tau_c / r.tau);
    CHECK(r.d == doctest::Approx(want).epsilon(5e-4));
}

TEST_CASE("transport value from the zero-bin weight: worked numbers") {
    CHECK(kvnmd::bartlett_from_p0(1.1334, 81.92, 4.097e-3) ==
          doctest::Approx(0.19020).epsilon(5e-5 / 0.19020));
    CHECK(kvnmd::dbart_error_bound(1.1334, 81.92, 1e-3) == doctest::Approx(0.04642).epsilon(1e-4));
}

TEST_CASE("readout-size extrapolation recovers a synthetic 1/K family") {
    std::vector<BartlettReadout> rs;
    const double d_inf = 0.37, a1 = 12.0;
    for (int m : {9, 10, 11}) {
        BartlettReadout b;
        b.m_anc = m;
        b.k = 1LL << m;
        b.d = d_inf + a1 / static_cast<double>(b.k);
        rs.push_back(b);
    }
    const auto fit = kvnmd::richardson(rs);
    CHECK(fit.d_inf == doctest::Approx(d_inf).epsilon(1e-12));
    CHECK(fit.a1 == doctest::Approx(a1).epsilon(1e-12));
    CHECK(fit.stderr_d < 1e-10);  // exact data: zero residual

    CHECK_THROWS(kvnmd::richardson({rs[0]}));  // needs two points
}

TEST_CASE("running integral of an exponential series converges to c0*tau_c") {
    const auto s = exponential_series(0.002, 20000, 1.0, 1.0);
    const auto d = kvnmd::gk_running(s);
    CHECK(d.back() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("register simulation matches the spectral reference") {
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 3, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 3, -6.0, 6.0)});
    const auto model = PotentialModel::cosine(1.0);
    StepConfig cfg;
    cfg.dt = 0.05;
    KvnState s = kvnmd::encode_canonical(g, model, 1.0);
    kvnmd::flux_excite(s, model, 0);

    const Eigen::MatrixXcd u = kvnmd::dense_step_matrix(g, model, cfg);
    for (int m : {3, 5}) {
        const auto sim = kvnmd::qpe_statevector(s, model, cfg, m);
        const auto ref = kvnmd::fejer_reference(u, s.amp, m);
        REQUIRE(sim.size() == static_cast<std::size_t>(1) << m);
        REQUIRE(ref.size() == sim.size());
        double total = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < sim.size(); ++i) {
            total += sim[i];
            diff = std::max(diff, std::abs(sim[i] - ref[i]));
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
        CHECK(diff < 1e-10);
    }
}

TEST_CASE("the zero bin of the register equals the lag-weighted sum") {
    // the two readout routes -- simulated register bin 0 and the
    // correlation-series identity -- must agree to near roundoff
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 3, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 3, -6.0, 6.0)});
    const auto model = PotentialModel::cosine(1.0);
    StepConfig cfg;
    cfg.dt = 0.05;
    KvnState eq = kvnmd::encode_canonical(g, model, 1.0);

    const int m = 4;
    const auto series = kvnmd::vacf_kvn(eq, model, cfg, (1 << m) - 1);
    const double p0 = kvnmd::p0_bartlett(series, 1 << m);

    KvnState exc = eq;
    kvnmd::flux_excite(exc, model, 0);
    const auto bins = kvnmd::qpe_statevector(exc, model, cfg, m);
    CHECK(std::abs(bins[0] - p0) < 1e-10);
}

TEST_CASE("refinement-scan fit recovers a known power law") {
    std::vector<std::pair<int, double>> pts;
    for (int n : {16, 32, 64, 128}) pts.push_back({n, 3.1 * std::pow(n, -1.17)});
    const auto fit = kvnmd::grid_error_scan(pts);
    REQUIRE(fit.ok);
    CHECK(fit.slope == doctest::Approx(-1.17).epsilon(1e-9));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.1).epsilon(1e-9));

    pts[1].second = 0.0;  // converged point disables the fit
    CHECK_FALSE(kvnmd::grid_error_scan(pts).ok);
}

TEST_CASE("pointwise deviation between correlation series") {
    CorrelationSeries a = exponential_series(0.1, 50, 2.0, 1.0);
    CorrelationSeries b = exponential_series(0.1, 40, 2.0, 1.0);
    b.c[20] += 0.25;  // raw deviation 2.0*0.25 = 0.5, over c0 = 2 -> 0.25
    CHECK(kvnmd::peak_deviation(a, b) == doctest::Approx(0.25).epsilon(1e-12));

    CorrelationSeries c = exponential_series(0.2, 40, 2.0, 1.0);
    CHECK_THROWS(kvnmd::peak_deviation(a, c));  // mismatched time grids
}

TEST_CASE("qubit sizing for a target accuracy") {
    CHECK(kvnmd::qubits_for_target(1.0, 81.92, 1e-3) == 17);
    CHECK(kvnmd::qubits_for_target(2.0, 81.92, 1e-3) == 9);
    CHECK(kvnmd::qubits_for_target(1.17, 1.0, 1e-2) == 6);
    CHECK_THROWS(kvnmd::qubits_for_target(0.0, 1.0, 1e-2));
}

TEST_CASE("joint-register budget guard") {
    const auto g = PhaseGrid({AxisSpec::binary("q1", true, 11, -M_PI, M_PI),
                              AxisSpec::binary("p1", false, 11, -6.0, 6.0)});
    const auto model = PotentialModel::cosine(1.0);
    StepConfig cfg;
    KvnState s{g, Eigen::VectorXcd::Ones(g.total_dim())};
    s.amp.normalize();
    // 2^22 state cells times 2^9 bins exceeds the 2^30 joint budget
    CHECK_THROWS_AS(kvnmd::qpe_statevector(s, model, cfg, 9), kvnmd::budget_error);
}
