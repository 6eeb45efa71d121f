#include "kvnmd/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "kvnmd/potential.hpp"

namespace kvnmd {

namespace {

bool label_is_q(const std::string& s) { return s.size() >= 1 && s[0] == 'q'; }
bool label_is_p(const std::string& s) { return s.size() >= 1 && s[0] == 'p'; }

int label_suffix(const std::string& s) {
    if (s.size() < 2) return 1;
    return std::atoi(s.c_str() + 1);
}

}  // namespace

AxisSpec AxisSpec::binary(std::string label, bool periodic, int n_qubits, double lo, double hi) {
    if (n_qubits < 1) throw std::invalid_argument("axis " + label + ": n_qubits must be >= 1");
    if (!(hi > lo)) throw std::invalid_argument("axis " + label + ": need hi > lo");
    AxisSpec a;
    a.label = std::move(label);
    a.periodic = periodic;
    a.n_qubits = n_qubits;
    a.n = 1 << n_qubits;
    a.lo = lo;
    a.hi = hi;
    return a;
}

AxisSpec AxisSpec::sized(std::string label, bool periodic, int n, double lo, double hi) {
    if (n < 2) throw std::invalid_argument("axis " + label + ": need n >= 2");
    if (!(hi > lo)) throw std::invalid_argument("axis " + label + ": need hi > lo");
    AxisSpec a;
    a.label = std::move(label);
    a.periodic = periodic;
    a.n_qubits = 0;
    a.n = n;
    a.lo = lo;
    a.hi = hi;
    return a;
}

PhaseGrid::PhaseGrid(std::vector<AxisSpec> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw std::invalid_argument("PhaseGrid: no axes");
    for (std::size_t i = 0; i < axes_.size(); ++i)
        for (std::size_t j = i + 1; j < axes_.size(); ++j)
            if (axes_[i].label == axes_[j].label)
                throw std::invalid_argument("PhaseGrid: duplicate axis label " + axes_[i].label);
    strides_.assign(axes_.size(), 1);
    total_ = 1;
    for (int i = static_cast<int>(axes_.size()) - 1; i >= 0; --i) {
        strides_[i] = total_;
        total_ *= axes_[i].n;
    }
}

int PhaseGrid::axis_index(const std::string& label) const {
    for (int i = 0; i < rank(); ++i)
        if (axes_[i].label == label) return i;
    throw std::invalid_argument("PhaseGrid: unknown axis label " + label);
}

bool PhaseGrid::has_axis(const std::string& label) const {
    for (const auto& a : axes_)
        if (a.label == label) return true;
    return false;
}

std::vector<int> PhaseGrid::q_axes() const {
    std::vector<int> out;
    for (int i = 0; i < rank(); ++i)
        if (label_is_q(axes_[i].label)) out.push_back(i);
    std::sort(out.begin(), out.end(), [&](int a, int b) {
        return label_suffix(axes_[a].label) < label_suffix(axes_[b].label);
    });
    return out;
}

std::vector<int> PhaseGrid::p_axes() const {
    std::vector<int> out;
    for (int i = 0; i < rank(); ++i)
        if (label_is_p(axes_[i].label)) out.push_back(i);
    std::sort(out.begin(), out.end(), [&](int a, int b) {
        return label_suffix(axes_[a].label) < label_suffix(axes_[b].label);
    });
    return out;
}

int PhaseGrid::xi_axis() const {
    for (int i = 0; i < rank(); ++i)
        if (axes_[i].label == "xi") return i;
    return -1;
}

Eigen::VectorXd wavenumbers(const AxisSpec& axis) {
    const int n = axis.n;
    Eigen::VectorXd k(n);
    const double base = 2.0 * M_PI / (n * axis.delta());
    for (int j = 0; j < n; ++j) {
        const int f = (j < n / 2 + n % 2) ? j : j - n;  // j - n for j >= ceil(n/2)
        k[j] = base * f;
    }
    return k;
}

Eigen::VectorXd axis_values(const AxisSpec& axis) {
    Eigen::VectorXd v(axis.n);
    for (int j = 0; j < axis.n; ++j) v[j] = axis.value(j);
    return v;
}

GridFunction tabulate(const PhaseGrid& grid,
                      const std::function<double(const std::vector<double>&)>& f) {
    GridFunction g{grid, Eigen::VectorXd(grid.total_dim())};
    const int rank = grid.rank();
    std::vector<double> coords(rank);
    std::vector<int> digits(rank, 0);
    for (int a = 0; a < rank; ++a) coords[a] = grid.axis(a).value(0);
    for (Eigen::Index flat = 0; flat < grid.total_dim(); ++flat) {
        g.values[flat] = f(coords);
        // odometer increment, last axis fastest
        for (int a = rank - 1; a >= 0; --a) {
            if (++digits[a] < grid.axis(a).n) {
                coords[a] = grid.axis(a).value(digits[a]);
                break;
            }
            digits[a] = 0;
            coords[a] = grid.axis(a).value(0);
        }
    }
    return g;
}

KvnState encode_canonical(const PhaseGrid& grid, const PotentialModel& model, double beta,
                          double thermostat_mass) {
    if (beta <= 0) throw std::invalid_argument("encode_canonical: beta must be positive");
    const auto qs = grid.q_axes();
    const auto ps = grid.p_axes();
    if (qs.size() != ps.size() || static_cast<int>(qs.size()) != model.n_dof())
        throw std::invalid_argument("encode_canonical: grid/model dof mismatch");
    const int xi = grid.xi_axis();
    const double q_th = thermostat_mass;

    // Half-exponent field: beta*H_cl/2 (+ beta*Q*xi^2/4), shifted by its
    // minimum before exponentiation.
    Eigen::VectorXd expo(grid.total_dim());
    const int rank = grid.rank();
    std::vector<int> digits(rank, 0);
    std::vector<double> qv(model.n_dof());
    double vmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index flat = 0; flat < grid.total_dim(); ++flat) {
        for (std::size_t i = 0; i < qs.size(); ++i) qv[i] = grid.axis(qs[i]).value(digits[qs[i]]);
        double h = model.energy(qv);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const double p = grid.axis(ps[i]).value(digits[ps[i]]);
            h += 0.5 * p * p / model.masses[i];
        }
        double e = 0.5 * beta * h;
        if (xi >= 0) {
            const double x = grid.axis(xi).value(digits[xi]);
            e += 0.25 * beta * q_th * x * x;
        }
        expo[flat] = e;
        vmin = std::min(vmin, e);
        for (int a = rank - 1; a >= 0; --a) {
            if (++digits[a] < grid.axis(a).n) break;
            digits[a] = 0;
        }
    }

    KvnState s{grid, Eigen::VectorXcd(grid.total_dim())};
    for (Eigen::Index flat = 0; flat < grid.total_dim(); ++flat)
        s.amp[flat] = Complex(std::exp(-(expo[flat] - vmin)), 0.0);
    const double nrm = s.amp.norm();
    if (!(nrm > 0)) throw std::runtime_error("encode_canonical: zero norm");
    s.amp /= nrm;
    return s;
}

double expectation(const KvnState& state, const GridFunction& obs) {
    if (!(state.grid == obs.grid))
        throw std::invalid_argument("expectation: observable on a different grid");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < state.amp.size(); ++i) acc += obs.values[i] * std::norm(state.amp[i]);
    return acc;
}

double expectation_axis(const KvnState& state, int ax, const std::function<double(double)>& f) {
    const auto& grid = state.grid;
    if (ax < 0 || ax >= grid.rank()) throw std::invalid_argument("expectation_axis: bad axis");
    const AxisSpec& axis = grid.axis(ax);
    // Marginal over the axis first, then a 1-d quadrature-free sum.
    Eigen::VectorXd marg = Eigen::VectorXd::Zero(axis.n);
    const Eigen::Index stride = grid.stride(ax);
    const Eigen::Index block = stride * axis.n;
    for (Eigen::Index base = 0; base < grid.total_dim(); base += block)
        for (int j = 0; j < axis.n; ++j) {
            const Complex* a = state.amp.data() + base + j * stride;
            double s = 0.0;
            for (Eigen::Index c = 0; c < stride; ++c) s += std::norm(a[c]);
            marg[j] += s;
        }
    double acc = 0.0;
    for (int j = 0; j < axis.n; ++j) acc += f(axis.value(j)) * marg[j];
    return acc;
}

GridFunction reduced_distribution(const KvnState& state, const std::vector<std::string>& keep) {
    const auto& grid = state.grid;
    if (keep.empty()) throw std::invalid_argument("reduced_distribution: no axes kept");
    std::vector<int> kept;
    for (const auto& label : keep) kept.push_back(grid.axis_index(label));
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
        throw std::invalid_argument("reduced_distribution: duplicate axis");

    std::vector<AxisSpec> sub;
    for (int a : kept) sub.push_back(grid.axis(a));
    PhaseGrid rgrid(sub);

    GridFunction out{rgrid, Eigen::VectorXd::Zero(rgrid.total_dim())};
    const int rank = grid.rank();
    std::vector<int> digits(rank, 0);
    for (Eigen::Index flat = 0; flat < grid.total_dim(); ++flat) {
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < kept.size(); ++i) r += rgrid.stride(static_cast<int>(i)) * digits[kept[i]];
        out.values[r] += std::norm(state.amp[flat]);
        for (int a = rank - 1; a >= 0; --a) {
            if (++digits[a] < grid.axis(a).n) break;
            digits[a] = 0;
        }
    }
    return out;
}

void scale_by_axis_function(KvnState& state, int ax, const std::function<double(double)>& f) {
    const auto& grid = state.grid;
    if (ax < 0 || ax >= grid.rank()) throw std::invalid_argument("scale_by_axis_function: bad axis");
    const AxisSpec& axis = grid.axis(ax);
    Eigen::VectorXd fv(axis.n);
    for (int j = 0; j < axis.n; ++j) fv[j] = f(axis.value(j));
    const Eigen::Index stride = grid.stride(ax);
    const Eigen::Index block = stride * axis.n;
    for (Eigen::Index base = 0; base < grid.total_dim(); base += block)
        for (int j = 0; j < axis.n; ++j) {
            Complex* a = state.amp.data() + base + j * stride;
            const double v = fv[j];
            for (Eigen::Index c = 0; c < stride; ++c) a[c] *= v;
        }
}

// -- serialization ----------------------------------------------------------

namespace {

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

constexpr char kMagic[4] = {'K', 'V', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_state(const std::string& path, const KvnState& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_state: cannot open " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, static_cast<std::uint32_t>(state.grid.rank()));
    for (const auto& a : state.grid.axes()) {
        put(os, static_cast<std::uint32_t>(a.label.size()));
        os.write(a.label.data(), static_cast<std::streamsize>(a.label.size()));
        put(os, static_cast<std::uint8_t>(a.periodic ? 1 : 0));
        put(os, static_cast<std::int32_t>(a.n_qubits));
        put(os, static_cast<std::int32_t>(a.n));
        put(os, a.lo);
        put(os, a.hi);
    }
    for (Eigen::Index i = 0; i < state.amp.size(); ++i) {
        put(os, state.amp[i].real());
        put(os, state.amp[i].imag());
    }
    if (!os) throw std::runtime_error("save_state: write failed for " + path);
}

KvnState load_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_state: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_state: bad magic in " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw std::runtime_error("load_state: unsupported version");
    const auto n_axes = get<std::uint32_t>(is);
    std::vector<AxisSpec> axes;
    for (std::uint32_t i = 0; i < n_axes; ++i) {
        AxisSpec a;
        const auto len = get<std::uint32_t>(is);
        a.label.resize(len);
        is.read(a.label.data(), len);
        a.periodic = get<std::uint8_t>(is) != 0;
        a.n_qubits = get<std::int32_t>(is);
        a.n = get<std::int32_t>(is);
        a.lo = get<double>(is);
        a.hi = get<double>(is);
        axes.push_back(std::move(a));
    }
    PhaseGrid grid(axes);
    KvnState s{grid, Eigen::VectorXcd(grid.total_dim())};
    for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        s.amp[i] = Complex(re, im);
    }
    if (!is) throw std::runtime_error("load_state: truncated file " + path);
    return s;
}

void save_state_csv(const std::string& path, const KvnState& state) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_state_csv: cannot open " + path);
    for (const auto& a : state.grid.axes()) os << a.label << ",";
    os << "re,im\n";
    char buf[64];
    const int rank = state.grid.rank();
    std::vector<int> digits(rank, 0);
    for (Eigen::Index flat = 0; flat < state.amp.size(); ++flat) {
        for (int a = 0; a < rank; ++a) os << digits[a] << ",";
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", state.amp[flat].real(),
                      state.amp[flat].imag());
        os << buf;
        for (int a = rank - 1; a >= 0; --a) {
            if (++digits[a] < state.grid.axis(a).n) break;
            digits[a] = 0;
        }
    }
}

}  // namespace kvnmd
