#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "kvnmd/amp_estimation.hpp"
#include "kvnmd/errors.hpp"
#include "kvnmd/fft.hpp"
#include "kvnmd/parallel.hpp"
#include "kvnmd/rng.hpp"

namespace kvnmd {

namespace {

constexpr int kGridPoints = 100000;
constexpr double kHalfPi = 1.5707963267948966;

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

double log_one_minus(double p) {
    return p < 0.5 ? std::log1p(-p) : safe_log(1.0 - p);
}

double log_likelihood(double theta, const std::vector<long long>& ks,
                      const std::vector<long long>& shots, const std::vector<long long>& hits) {
    double ll = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const double p = p_k(theta, ks[i]);
        ll += static_cast<double>(hits[i]) * safe_log(p) +
              static_cast<double>(shots[i] - hits[i]) * log_one_minus(p);
    }
    return ll;
}

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 120 && (b - a) > 1e-15; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

void check_stages(const std::vector<long long>& ks, const std::vector<long long>& shots,
                  const std::vector<long long>& hits) {
    if (ks.empty() || ks.size() != shots.size() || ks.size() != hits.size())
        throw std::invalid_argument("mlae: inconsistent stage lists");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 0 || shots[i] <= 0 || hits[i] < 0 || hits[i] > shots[i])
            throw std::invalid_argument("mlae: bad stage counts");
    }
}

// Deterministic parallel mean of per-repetition squared errors: fixed-size
// chunks are filled in parallel and reduced in repetition order.
template <class PerRep>
double rmse_over_reps(int n_rep, PerRep&& sq_err) {
    if (n_rep <= 0) throw std::invalid_argument("rmse harness: need repetitions");
    const int chunk = 16;
    std::vector<double> scratch(chunk);
    double acc = 0.0;
    for (int base = 0; base < n_rep; base += chunk) {
        const int batch = std::min(chunk, n_rep - base);
        parallel_for(batch, [&](std::size_t bi) {
            scratch[bi] = sq_err(base + static_cast<int>(bi));
        });
        for (int bi = 0; bi < batch; ++bi) acc += scratch[bi];
    }
    return std::sqrt(acc / static_cast<double>(n_rep));
}

}  // namespace

double p_k(double theta, long long k) {
    const double s = std::sin(static_cast<double>(2 * k + 1) * theta);
    return s * s;
}

double fixed_k_estimate(long long k, long long shots, long long hits) {
    if (k < 0 || shots <= 0 || hits < 0 || hits > shots)
        throw std::invalid_argument("fixed_k_estimate: bad counts");
    const double p = static_cast<double>(hits) / static_cast<double>(shots);
    const double theta = std::asin(std::sqrt(p)) / static_cast<double>(2 * k + 1);
    const double s = std::sin(theta);
    return s * s;
}

MlaeResult mlae_estimate(const std::vector<long long>& ks, const std::vector<long long>& shots,
                         const std::vector<long long>& hits) {
    check_stages(ks, shots, hits);
    const double h = kHalfPi / kGridPoints;
    double best_theta = 0.5 * h;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < kGridPoints; ++j) {
        const double theta = (j + 0.5) * h;
        const double ll = log_likelihood(theta, ks, shots, hits);
        if (ll > best_ll) {
            best_ll = ll;
            best_theta = theta;
        }
    }
    const double lo = std::max(1e-12, best_theta - h);
    const double hi = std::min(kHalfPi - 1e-12, best_theta + h);
    MlaeResult r;
    r.theta = golden_max([&](double t) { return log_likelihood(t, ks, shots, hits); }, lo, hi);
    const double ll_ref = log_likelihood(r.theta, ks, shots, hits);
    if (ll_ref < best_ll) r.theta = best_theta;  // keep the grid winner on ties
    r.amplitude = std::sin(r.theta) * std::sin(r.theta);
    r.log_likelihood = log_likelihood(r.theta, ks, shots, hits);
    return r;
}

long long AmpSchedule::n_queries() const {
    long long n = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) n += shots[i] * (2 * ks[i] + 1);
    return n;
}

AmpSchedule eis_schedule(int n_stages, long long shots_per_stage) {
    if (n_stages < 1 || shots_per_stage < 1)
        throw std::invalid_argument("eis_schedule: bad stage layout");
    AmpSchedule s;
    for (int l = 1; l <= n_stages; ++l) {
        s.ks.push_back(l == 1 ? 0 : 1LL << (l - 2));
        s.shots.push_back(shots_per_stage);
    }
    return s;
}

RmseSample mlae_rmse(double a_true, const AmpSchedule& schedule, int n_rep, std::uint64_t seed) {
    if (a_true <= 0.0 || a_true >= 1.0) throw std::invalid_argument("mlae_rmse: amplitude in (0,1)");
    const std::size_t n_stages = schedule.ks.size();
    if (n_stages == 0) throw std::invalid_argument("mlae_rmse: empty schedule");
    const double theta_true = std::asin(std::sqrt(a_true));

    // Per-stage log-probability tables over the angle grid, shared by all
    // repetitions.
    const double h = kHalfPi / kGridPoints;
    std::vector<Eigen::ArrayXd> lp(n_stages), lq(n_stages);
    for (std::size_t i = 0; i < n_stages; ++i) {
        lp[i].resize(kGridPoints);
        lq[i].resize(kGridPoints);
    }
    parallel_for(n_stages, [&](std::size_t i) {
        for (int j = 0; j < kGridPoints; ++j) {
            const double p = p_k((j + 0.5) * h, schedule.ks[i]);
            lp[i][j] = safe_log(p);
            lq[i][j] = log_one_minus(p);
        }
    });

    std::vector<double> p_true(n_stages);
    for (std::size_t i = 0; i < n_stages; ++i) p_true[i] = p_k(theta_true, schedule.ks[i]);

    RmseSample out;
    out.n_queries = schedule.n_queries();
    out.rmse = rmse_over_reps(n_rep, [&](int rep) {
        CounterRng rng(seed, static_cast<std::uint64_t>(rep));
        std::vector<long long> hits(n_stages);
        for (std::size_t i = 0; i < n_stages; ++i)
            hits[i] = rng.binomial(schedule.shots[i], p_true[i]);

        Eigen::ArrayXd ll = Eigen::ArrayXd::Zero(kGridPoints);
        for (std::size_t i = 0; i < n_stages; ++i)
            ll += static_cast<double>(hits[i]) * lp[i] +
                  static_cast<double>(schedule.shots[i] - hits[i]) * lq[i];
        Eigen::Index jbest = 0;
        ll.maxCoeff(&jbest);  // first occurrence: smallest angle wins ties
        const double center = (static_cast<double>(jbest) + 0.5) * h;

        const double lo = std::max(1e-12, center - h);
        const double hi = std::min(kHalfPi - 1e-12, center + h);
        double theta = golden_max(
            [&](double t) { return log_likelihood(t, schedule.ks, schedule.shots, hits); }, lo,
            hi);
        if (log_likelihood(theta, schedule.ks, schedule.shots, hits) <
            log_likelihood(center, schedule.ks, schedule.shots, hits))
            theta = center;
        const double a_hat = std::sin(theta) * std::sin(theta);
        return (a_hat - a_true) * (a_hat - a_true);
    });
    return out;
}

RmseSample naive_rmse(double a_true, long long shots, int n_rep, std::uint64_t seed) {
    if (a_true < 0.0 || a_true > 1.0 || shots <= 0)
        throw std::invalid_argument("naive_rmse: bad inputs");
    RmseSample out;
    out.n_queries = shots;
    out.rmse = rmse_over_reps(n_rep, [&](int rep) {
        CounterRng rng(seed, static_cast<std::uint64_t>(rep));
        const double a_hat =
            static_cast<double>(rng.binomial(shots, a_true)) / static_cast<double>(shots);
        return (a_hat - a_true) * (a_hat - a_true);
    });
    return out;
}

RmseSample fixed_k_rmse(double a_true, long long k, long long shots, int n_rep,
                        std::uint64_t seed) {
    if (a_true <= 0.0 || a_true >= 1.0 || k < 0 || shots <= 0)
        throw std::invalid_argument("fixed_k_rmse: bad inputs");
    const double theta_true = std::asin(std::sqrt(a_true));
    const double p = p_k(theta_true, k);
    RmseSample out;
    out.n_queries = shots * (2 * k + 1);
    out.rmse = rmse_over_reps(n_rep, [&](int rep) {
        CounterRng rng(seed, static_cast<std::uint64_t>(rep));
        const double a_hat = fixed_k_estimate(k, shots, rng.binomial(shots, p));
        return (a_hat - a_true) * (a_hat - a_true);
    });
    return out;
}

Eigen::VectorXcd grover_prepare(const GroverOracle& oracle) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(oracle.dim);
    v[0] = 1.0;
    oracle.a(v);
    return v;
}

void grover_iterate(Eigen::VectorXcd& v, const GroverOracle& oracle) {
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (oracle.good(j)) v[j] = -v[j];
    oracle.a_dag(v);
    v[0] = -v[0];
    oracle.a(v);
    v = -v;
}

double good_probability(const Eigen::VectorXcd& v, const GroverOracle& oracle) {
    double p = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (oracle.good(j)) p += std::norm(v[j]);
    return p;
}

GroverOracle rotation_oracle(double theta) {
    GroverOracle o;
    o.dim = 2;
    const double c = std::cos(theta), s = std::sin(theta);
    o.a = [c, s](Eigen::VectorXcd& v) {
        const Complex x = v[0], y = v[1];
        v[0] = c * x - s * y;
        v[1] = s * x + c * y;
    };
    o.a_dag = [c, s](Eigen::VectorXcd& v) {
        const Complex x = v[0], y = v[1];
        v[0] = c * x + s * y;
        v[1] = -s * x + c * y;
    };
    o.good = [](Eigen::Index j) { return j == 1; };
    return o;
}

GroverOracle qpe_oracle(const KvnState& excited, const PotentialModel& model,
                        const StepConfig& cfg, int m_anc) {
    if (m_anc < 1 || m_anc > 20) throw std::invalid_argument("qpe_oracle: bad ancilla width");
    const Eigen::Index total = excited.grid.total_dim();
    const long long k = 1LL << m_anc;
    if (k * static_cast<long long>(total) > (1LL << 22))
        throw budget_error("qpe_oracle: joint register exceeds 2^22 amplitudes");

    struct Ctx {
        PhaseGrid grid;
        Eigen::Index total;
        long long k;
        int m_anc;
        std::shared_ptr<StepPlan> fwd, bwd;
        Eigen::VectorXcd w;      // reflection axis of the preparation step
        double wn2 = 0.0;
        bool trivial_prep = false;
    };
    auto ctx = std::make_shared<Ctx>();
    ctx->grid = excited.grid;
    ctx->total = total;
    ctx->k = k;
    ctx->m_anc = m_anc;
    ctx->fwd = std::make_shared<StepPlan>(excited.grid, model, cfg);
    StepConfig back = cfg;
    back.dt = -cfg.dt;
    ctx->bwd = std::make_shared<StepPlan>(excited.grid, model, back);

    // Reflection sending |0> to the (phase-adjusted) excited state.
    Eigen::VectorXcd t = excited.amp / excited.amp.norm();
    if (std::abs(t[0]) > 1e-14) t *= std::conj(t[0]) / std::abs(t[0]);
    ctx->w = -t;
    ctx->w[0] += 1.0;
    ctx->wn2 = ctx->w.squaredNorm();
    ctx->trivial_prep = ctx->wn2 < 1e-30;

    auto prep_blocks = [ctx](Eigen::VectorXcd& v) {
        if (ctx->trivial_prep) return;
        for (long long r = 0; r < ctx->k; ++r) {
            auto seg = v.segment(static_cast<Eigen::Index>(r) * ctx->total, ctx->total);
            const Complex proj = ctx->w.dot(seg) * (2.0 / ctx->wn2);
            seg -= proj * ctx->w;
        }
    };
    auto hadamard_register = [ctx](Eigen::VectorXcd& v) {
        const double inv_sqrt2 = 0.7071067811865476;
        for (int b = 0; b < ctx->m_anc; ++b) {
            const long long stride = 1LL << b;
            for (long long r0 = 0; r0 < ctx->k; ++r0) {
                if (r0 & stride) continue;
                auto x = v.segment(static_cast<Eigen::Index>(r0) * ctx->total, ctx->total);
                auto y = v.segment(static_cast<Eigen::Index>(r0 + stride) * ctx->total,
                                   ctx->total);
                const Eigen::VectorXcd sum = x + y;
                y = (x - y) * inv_sqrt2;
                x = sum * inv_sqrt2;
            }
        }
    };
    auto powers = [ctx](Eigen::VectorXcd& v, bool backward) {
        KvnState work{ctx->grid, Eigen::VectorXcd(ctx->total)};
        StepPlan& plan = backward ? *ctx->bwd : *ctx->fwd;
        for (long long r = 1; r < ctx->k; ++r) {
            work.amp = v.segment(static_cast<Eigen::Index>(r) * ctx->total, ctx->total);
            for (long long s = 0; s < r; ++s) plan.step(work);
            v.segment(static_cast<Eigen::Index>(r) * ctx->total, ctx->total) = work.amp;
        }
    };

    GroverOracle o;
    o.dim = static_cast<Eigen::Index>(k) * total;
    o.a = [ctx, prep_blocks, hadamard_register, powers](Eigen::VectorXcd& v) {
        prep_blocks(v);
        hadamard_register(v);
        powers(v, false);
        fft_axis(v.data(), static_cast<int>(ctx->k), ctx->total, 1, true);
    };
    o.a_dag = [ctx, prep_blocks, hadamard_register, powers](Eigen::VectorXcd& v) {
        fft_axis(v.data(), static_cast<int>(ctx->k), ctx->total, 1, false);
        powers(v, true);
        hadamard_register(v);
        prep_blocks(v);
    };
    o.good = [ctx](Eigen::Index j) { return j < ctx->total; };
    return o;
}

}  // namespace kvnmd
