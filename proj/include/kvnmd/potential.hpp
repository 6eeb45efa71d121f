#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace kvnmd {

// Interaction models with analytic forces. Positions live on [0, 2*pi).
//
//   cosine_1p        : V(q) = v0*cos(q)
//   coupled_cosine_2p: V(q1,q2) = v0*(cos(q1-q2) + eps*(cos(q1) + cos(q2)))
//   tabulated        : caller supplies energy and per-dof force callbacks
struct PotentialModel {
    enum class Kind { cosine_1p, coupled_cosine_2p, tabulated };

    Kind kind = Kind::cosine_1p;
    double v0 = 1.0;
    double eps = 0.0;
    std::vector<double> masses{1.0};

    // Used only for Kind::tabulated.
    std::function<double(const std::vector<double>&)> energy_fn;
    std::function<double(int, const std::vector<double>&)> force_fn;

    int n_dof() const { return static_cast<int>(masses.size()); }

    double energy(const std::vector<double>& q) const;
    // Force on dof i: F_i = -dV/dq_i.
    double force(int i, const std::vector<double>& q) const;

    static PotentialModel cosine(double v0, double mass = 1.0);
    static PotentialModel coupled_cosine(double v0, double eps, double m1 = 1.0, double m2 = 1.0);
    static PotentialModel tabulated(std::vector<double> masses,
                                    std::function<double(const std::vector<double>&)> energy,
                                    std::function<double(int, const std::vector<double>&)> force);
};

}  // namespace kvnmd
