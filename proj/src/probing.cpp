#include "t4s/probing.hpp"

namespace t4s {

BasePoint make_base_point(const ImplicitMap& map, const Vector& theta) {
    BasePoint b;
    b.theta = theta;
    b.u = map.solve_state(theta);
    b.solver = map.linearize(theta, b.u);
    return b;
}

ProbeSession::ProbeSession(const ImplicitMap& map, const BasePoint& base, std::vector<Vector> directions)
    : map_(map), base_(base), dirs_(std::move(directions)) {
    require(static_cast<int>(dirs_.size()) <= kMaxLabels, "too many probing directions");
    for (const auto& d : dirs_) require(d.size() == map.theta_dim(), "direction dimension mismatch");
    states_[0] = base_.u;
    const int side = VanishTable::kSide;
    vanish_.r.resize(static_cast<std::size_t>(side * side));
    vanish_.q.resize(static_cast<std::size_t>(side * side));
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b) {
            vanish_.r[static_cast<std::size_t>(a * side + b)] = map.R_vanishes(a, b);
            vanish_.q[static_cast<std::size_t>(a * side + b)] = map.Q_vanishes(a, b);
        }
}

void ProbeSession::set_omega(const Vector& omega) {
    require(omega.size() == map_.output_dim(), "output functional dimension mismatch");
    if (has_omega_ && omega.size() == omega_.size() && omega == omega_) return;
    omega_ = omega;
    has_omega_ = true;
    adjoints_.clear();
}

// Sum of all formula terms except the one carrying the unknown node `skip`
// (A u_skip for states, A^T v_skip for adjoints).
Vector ProbeSession::evaluate(FormulaKind kind, Multiset alpha, Multiset skip) {
    const CanonicalFormula cf = canonical_formula(kind, alpha, &vanish_);
    Vector acc;
    ImplicitMap::Dirs th, ud;
    for (const auto& [term, count] : *cf.formula) {
        const Multiset mu = relabel(term.mu, cf.to_actual);
        if (kind == FormulaKind::State && mu == 0 && term.gamma.size() == 1 &&
            relabel(term.gamma[0], cf.to_actual) == skip)
            continue;
        if (kind == FormulaKind::Adjoint && term.tag == Tag::R && mu == 0 && term.gamma.empty() &&
            relabel(term.lambda, cf.to_actual) == skip)
            continue;
        th.clear();
        ud.clear();
        for (int l : ms_labels(mu)) th.push_back(&dirs_[static_cast<std::size_t>(l)]);
        for (Multiset g : term.gamma) ud.push_back(&state(relabel(g, cf.to_actual)));
        Vector val;
        if (term.open == Slot::None) {
            val = term.tag == Tag::Q ? map_.Q_partial(base_.theta, base_.u, th, ud)
                                     : map_.R_partial(base_.theta, base_.u, th, ud);
        } else if (term.tag == Tag::Q) {
            val = map_.Q_adjoint_partial(base_.theta, base_.u, omega_, term.open, th, ud);
        } else {
            const Vector& v = adjoint(relabel(term.lambda, cf.to_actual));
            val = map_.R_adjoint_partial(base_.theta, base_.u, v, term.open, th, ud);
        }
        if (acc.size() == 0)
            acc = static_cast<double>(count) * val;
        else
            acc += static_cast<double>(count) * val;
    }
    if (acc.size() == 0) {
        Index dim = kind == FormulaKind::Output ? map_.output_dim()
                  : kind == FormulaKind::Gradient ? map_.theta_dim()
                                                  : map_.state_dim();
        acc = Vector::Zero(dim);
    }
    return acc;
}

const Vector& ProbeSession::state(Multiset beta) {
    auto it = states_.find(beta);
    if (it != states_.end()) return it->second;
    for (Multiset sub : ms_lattice(beta))
        if (sub != beta && !states_.count(sub)) state(sub);
    Vector rhs = evaluate(FormulaKind::State, beta, beta);
    Vector u = base_.solver->solve(-rhs);
    ++counters_.state;
    return states_.emplace(beta, std::move(u)).first->second;
}

const Vector& ProbeSession::adjoint(Multiset beta) {
    require(has_omega_, "adjoint requested before an output functional was set");
    auto it = adjoints_.find(beta);
    if (it != adjoints_.end()) return it->second;
    for (Multiset sub : ms_lattice(beta)) {
        if (sub != beta && !adjoints_.count(sub)) adjoint(sub);
        if (sub != 0) state(sub);
    }
    Vector rhs = evaluate(FormulaKind::Adjoint, beta, beta);
    Vector v = base_.solver->solve_adjoint(-rhs);
    if (beta == 0)
        ++counters_.base_adjoint;
    else
        ++counters_.adjoint;
    return adjoints_.emplace(beta, std::move(v)).first->second;
}

Vector ProbeSession::forward(Multiset alpha) {
    require(ms_size(alpha) >= 1, "forward probe needs at least one direction");
    for (int l : ms_labels(alpha)) require(l < static_cast<int>(dirs_.size()), "direction label out of range");
    for (Multiset sub : ms_lattice(alpha))
        if (sub != 0) state(sub);
    return evaluate(FormulaKind::Output, alpha, ~Multiset{0});
}

Vector ProbeSession::reverse(Multiset alpha, const Vector& omega) {
    for (int l : ms_labels(alpha)) require(l < static_cast<int>(dirs_.size()), "direction label out of range");
    set_omega(omega);
    for (Multiset sub : ms_lattice(alpha)) {
        if (sub != 0) state(sub);
        adjoint(sub);
    }
    return evaluate(FormulaKind::Gradient, alpha, ~Multiset{0});
}

Vector forward_probe(const ImplicitMap& map, const BasePoint& base, const std::vector<Vector>& directions,
                     Multiset alpha, SolveCounters* counters) {
    ProbeSession s(map, base, directions);
    Vector y = s.forward(alpha);
    if (counters) *counters = s.counters();
    return y;
}

Vector reverse_probe(const ImplicitMap& map, const BasePoint& base, const std::vector<Vector>& directions,
                     Multiset alpha, const Vector& omega, SolveCounters* counters) {
    ProbeSession s(map, base, directions);
    Vector psi = s.reverse(alpha, omega);
    if (counters) *counters = s.counters();
    return psi;
}

}  // namespace t4s
