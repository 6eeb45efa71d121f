#include "kvnmd/potential.hpp"

#include <cmath>

namespace kvnmd {

double PotentialModel::energy(const std::vector<double>& q) const {
    switch (kind) {
        case Kind::cosine_1p:
            return v0 * std::cos(q.at(0));
        case Kind::coupled_cosine_2p:
            return v0 * (std::cos(q.at(0) - q.at(1)) + eps * (std::cos(q.at(0)) + std::cos(q.at(1))));
        case Kind::tabulated:
            if (!energy_fn) throw std::logic_error("tabulated potential lacks energy callback");
            return energy_fn(q);
    }
    throw std::logic_error("unreachable");
}

double PotentialModel::force(int i, const std::vector<double>& q) const {
    switch (kind) {
        case Kind::cosine_1p:
            if (i != 0) throw std::invalid_argument("cosine_1p has a single dof");
            return v0 * std::sin(q.at(0));
        case Kind::coupled_cosine_2p: {
            const double s12 = std::sin(q.at(0) - q.at(1));
            if (i == 0) return v0 * (s12 + eps * std::sin(q.at(0)));
            if (i == 1) return v0 * (-s12 + eps * std::sin(q.at(1)));
            throw std::invalid_argument("coupled_cosine_2p has two dofs");
        }
        case Kind::tabulated:
            if (!force_fn) throw std::logic_error("tabulated potential lacks force callback");
            return force_fn(i, q);
    }
    throw std::logic_error("unreachable");
}

PotentialModel PotentialModel::cosine(double v0, double mass) {
    PotentialModel m;
    m.kind = Kind::cosine_1p;
    m.v0 = v0;
    m.masses = {mass};
    return m;
}

PotentialModel PotentialModel::coupled_cosine(double v0, double eps, double m1, double m2) {
    PotentialModel m;
    m.kind = Kind::coupled_cosine_2p;
    m.v0 = v0;
    m.eps = eps;
    m.masses = {m1, m2};
    return m;
}

PotentialModel PotentialModel::tabulated(std::vector<double> masses,
                                         std::function<double(const std::vector<double>&)> energy,
                                         std::function<double(int, const std::vector<double>&)> force) {
    PotentialModel m;
    m.kind = Kind::tabulated;
    m.masses = std::move(masses);
    m.energy_fn = std::move(energy);
    m.force_fn = std::move(force);
    return m;
}

}  // namespace kvnmd
