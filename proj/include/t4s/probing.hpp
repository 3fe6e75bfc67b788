#pragma once

#include "t4s/implicit_map.hpp"

#include <map>

namespace t4s {

struct BasePoint {
    Vector theta;
    Vector u;
    std::shared_ptr<const LinearSolver> solver;
};

BasePoint make_base_point(const ImplicitMap& map, const Vector& theta);

struct SolveCounters {
    std::uint64_t base_state = 0;
    std::uint64_t state = 0;          // incremental state solves
    std::uint64_t base_adjoint = 0;
    std::uint64_t adjoint = 0;        // incremental adjoint solves
};

/// Lattice of incremental states/adjoints for fixed directions at a base point.
/// States persist across calls, so higher orders reuse lower-order nodes.
class ProbeSession {
public:
    ProbeSession(const ImplicitMap& map, const BasePoint& base, std::vector<Vector> directions);

    /// y = D^|alpha| q Theta^alpha.
    Vector forward(Multiset alpha);
    /// psi with psi(nu) = omega(D^{|alpha|+1} q Theta^alpha nu).
    Vector reverse(Multiset alpha, const Vector& omega);

    const Vector& state(Multiset beta);
    const Vector& adjoint(Multiset beta);

    const SolveCounters& counters() const { return counters_; }

private:
    Vector evaluate(FormulaKind kind, Multiset alpha, Multiset skip);
    void set_omega(const Vector& omega);

    const ImplicitMap& map_;
    const BasePoint& base_;
    std::vector<Vector> dirs_;
    VanishTable vanish_;
    std::map<Multiset, Vector> states_;
    std::map<Multiset, Vector> adjoints_;
    Vector omega_;
    bool has_omega_ = false;
    SolveCounters counters_;
};

/// Single-shot helpers; each runs on a fresh lattice.
Vector forward_probe(const ImplicitMap& map, const BasePoint& base, const std::vector<Vector>& directions,
                     Multiset alpha, SolveCounters* counters = nullptr);
Vector reverse_probe(const ImplicitMap& map, const BasePoint& base, const std::vector<Vector>& directions,
                     Multiset alpha, const Vector& omega, SolveCounters* counters = nullptr);

}  // namespace t4s
