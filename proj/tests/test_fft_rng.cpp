#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "kvnmd/fft.hpp"
#include "kvnmd/parallel.hpp"
#include "kvnmd/rng.hpp"

using kvnmd::Complex;

namespace {

// Quadratic-time reference transform with the same unitary convention.
std::vector<Complex> dft_reference(const std::vector<Complex>& x, bool inverse) {
    const int n = static_cast<int>(x.size());
    const double sign = inverse ? 1.0 : -1.0;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<Complex> out(x.size());
    for (int f = 0; f < n; ++f) {
        Complex acc(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * M_PI * f * j / n;
            acc += x[j] * Complex(std::cos(ang), std::sin(ang));
        }
        out[f] = norm * acc;
    }
    return out;
}

std::vector<Complex> random_signal(int n, std::uint64_t seed) {
    kvnmd::CounterRng rng(seed);
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    return x;
}

double max_err(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("fft matches the quadratic reference on power-of-two lengths") {
    for (int n : {2, 4, 8, 32, 128}) {
        auto x = random_signal(n, 11 + n);
        auto want = dft_reference(x, false);
        auto got = x;
        kvnmd::fft_inplace(got.data(), n, false);
        CHECK(max_err(got, want) < 1e-12);

        want = dft_reference(x, true);
        got = x;
        kvnmd::fft_inplace(got.data(), n, true);
        CHECK(max_err(got, want) < 1e-12);
    }
}

TEST_CASE("fft matches the quadratic reference on general lengths") {
    for (int n : {3, 6, 12, 48, 50}) {
        auto x = random_signal(n, 211 + n);
        auto want = dft_reference(x, false);
        auto got = x;
        kvnmd::fft_inplace(got.data(), n, false);
        CHECK(max_err(got, want) < 1e-11);
    }
}

TEST_CASE("fft is unitary: roundtrip identity and norm preservation") {
    for (int n : {16, 12}) {
        auto x = random_signal(n, 5 + n);
        auto y = x;
        kvnmd::fft_inplace(y.data(), n, false);

        double nx = 0.0, ny = 0.0;
        for (int i = 0; i < n; ++i) {
            nx += std::norm(x[i]);
            ny += std::norm(y[i]);
        }
        CHECK(std::abs(nx - ny) < 1e-12);  // Parseval

        kvnmd::fft_inplace(y.data(), n, true);
        CHECK(max_err(y, x) < 1e-13);
    }
}

TEST_CASE("fft_axis transforms every fiber of a strided layout independently") {
    // 3 x 8 x 5 row-major block, transform the middle axis.
    const int n0 = 3, n1 = 8, n2 = 5;
    auto flat = random_signal(n0 * n1 * n2, 99);

    auto want = flat;
    for (int a = 0; a < n0; ++a)
        for (int c = 0; c < n2; ++c) {
            std::vector<Complex> fiber(n1);
            for (int b = 0; b < n1; ++b) fiber[b] = flat[(a * n1 + b) * n2 + c];
            fiber = dft_reference(fiber, false);
            for (int b = 0; b < n1; ++b) want[(a * n1 + b) * n2 + c] = fiber[b];
        }

    auto got = flat;
    kvnmd::fft_axis(got.data(), n1, n2, n0, false);
    CHECK(max_err(got, want) < 1e-12);

    kvnmd::fft_axis(got.data(), n1, n2, n0, true);
    CHECK(max_err(got, flat) < 1e-12);
}

TEST_CASE("fft_axis covers first and last axes") {
    const int n0 = 4, n1 = 6;
    auto flat = random_signal(n0 * n1, 123);

    auto got = flat;
    kvnmd::fft_axis(got.data(), n0, n1, 1, false);  // first axis, stride n1
    auto want = flat;
    for (int c = 0; c < n1; ++c) {
        std::vector<Complex> fiber(n0);
        for (int a = 0; a < n0; ++a) fiber[a] = flat[a * n1 + c];
        fiber = dft_reference(fiber, false);
        for (int a = 0; a < n0; ++a) want[a * n1 + c] = fiber[a];
    }
    CHECK(max_err(got, want) < 1e-12);

    got = flat;
    kvnmd::fft_axis(got.data(), n1, 1, n0, false);  // last axis, contiguous
    want = flat;
    for (int a = 0; a < n0; ++a) {
        std::vector<Complex> fiber(flat.begin() + a * n1, flat.begin() + (a + 1) * n1);
        fiber = dft_reference(fiber, false);
        for (int b = 0; b < n1; ++b) want[a * n1 + b] = fiber[b];
    }
    CHECK(max_err(got, want) < 1e-12);
}

TEST_CASE("is_pow2") {
    CHECK(kvnmd::is_pow2(1));
    CHECK(kvnmd::is_pow2(2));
    CHECK(kvnmd::is_pow2(1024));
    CHECK_FALSE(kvnmd::is_pow2(0));
    CHECK_FALSE(kvnmd::is_pow2(12));
    CHECK_FALSE(kvnmd::is_pow2(-4));
}

TEST_CASE("counter rng is reproducible and stream-splittable") {
    kvnmd::CounterRng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // distinct streams decorrelate from the first draw
    kvnmd::CounterRng c(42, 8);
    CHECK(a.next_u64() != c.next_u64());

    // a freshly constructed generator reproduces any trajectory in isolation
    kvnmd::CounterRng d(42, 7);
    kvnmd::CounterRng e(42, 7);
    for (int i = 0; i < 10; ++i) (void)d.next_double();
    // e can't skip ahead, but same-prefix equality is the contract we rely on
    for (int i = 0; i < 10; ++i) (void)e.next_double();
    CHECK(d.next_double() == e.next_double());

    kvnmd::CounterRng p(1, 0);
    kvnmd::CounterRng q = p.split(3);
    kvnmd::CounterRng r = p.split(4);
    CHECK(q.next_u64() != r.next_u64());
}

TEST_CASE("rng moments are sane") {
    kvnmd::CounterRng rng(2024);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        s1 += u;
        s2 += u * u;
    }
    CHECK(std::abs(s1 / n - 0.5) < 0.005);
    CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.005);

    double g1 = 0.0, g2 = 0.0, g4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        g1 += g;
        g2 += g * g;
        g4 += g * g * g * g;
    }
    CHECK(std::abs(g1 / n) < 0.01);
    CHECK(std::abs(g2 / n - 1.0) < 0.02);
    CHECK(std::abs(g4 / n - 3.0) < 0.1);
}

TEST_CASE("binomial sampling tracks n*p") {
    kvnmd::CounterRng rng(7);
    const int reps = 400;
    double acc = 0.0;
    for (int i = 0; i < reps; ++i) acc += static_cast<double>(rng.binomial(100, 0.3));
    const double mean = acc / reps;  // expect 30, sd of the mean ~ 0.23
    CHECK(std::abs(mean - 30.0) < 1.0);
}

TEST_CASE("parallel_for results do not depend on the worker count") {
    const std::size_t n = 1000;
    auto fill = [&](std::vector<double>& out) {
        out.assign(n, 0.0);
        kvnmd::parallel_for(n, [&](std::size_t i) {
            kvnmd::CounterRng rng(5, i);
            out[i] = rng.next_gaussian() + std::sin(static_cast<double>(i));
        });
    };

    const int saved = kvnmd::worker_count();
    std::vector<double> serial, pooled;
    kvnmd::set_worker_count(1);
    fill(serial);
    kvnmd::set_worker_count(4);
    fill(pooled);
    kvnmd::set_worker_count(saved);

    REQUIRE(serial.size() == pooled.size());
    for (std::size_t i = 0; i < n; ++i) CHECK(serial[i] == pooled[i]);
}

TEST_CASE("parallel_for_blocks covers the range exactly once") {
    const std::size_t n = 777;
    std::vector<int> hits(n, 0);
    kvnmd::parallel_for_blocks(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == static_cast<int>(n));
    CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
}
