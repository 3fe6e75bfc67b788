#include "t4s/symbolic.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace t4s {

bool SymbolicTerm::operator<(const SymbolicTerm& o) const {
    return std::tie(tag, open, has_lambda, mu, lambda, gamma) <
           std::tie(o.tag, o.open, o.has_lambda, o.mu, o.lambda, o.gamma);
}

std::size_t SymbolicTermHash::operator()(const SymbolicTerm& t) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
        h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(t.tag) | (static_cast<std::uint64_t>(t.open) << 8) |
        (static_cast<std::uint64_t>(t.has_lambda) << 16));
    mix(t.mu);
    mix(t.lambda);
    for (Multiset g : t.gamma) mix(g);
    return static_cast<std::size_t>(h);
}

namespace {

void insert_sorted(std::vector<Multiset>& v, Multiset x) { v.insert(std::upper_bound(v.begin(), v.end(), x), x); }

}  // namespace

TermMap symbolic_differentiate(const TermMap& terms, int label) {
    TermMap out;
    out.reserve(terms.size() * 3);
    const Multiset single = ms_add(0, label);
    for (const auto& [t, c] : terms) {
        {
            SymbolicTerm n = t;
            n.mu = ms_add(n.mu, label);
            out[n] += c;
        }
        {
            SymbolicTerm n = t;
            insert_sorted(n.gamma, single);
            out[n] += c;
        }
        for (std::size_t k = 0; k < t.gamma.size();) {
            std::size_t e = k;
            while (e < t.gamma.size() && t.gamma[e] == t.gamma[k]) ++e;
            SymbolicTerm n = t;
            n.gamma.erase(n.gamma.begin() + static_cast<std::ptrdiff_t>(k));
            insert_sorted(n.gamma, ms_add(t.gamma[k], label));
            out[n] += c * static_cast<std::uint64_t>(e - k);
            k = e;
        }
        if (t.has_lambda) {
            SymbolicTerm n = t;
            n.lambda = ms_add(n.lambda, label);
            out[n] += c;
        }
    }
    return out;
}

TermMap differentiate_along(TermMap terms, Multiset alpha) {
    for (int l : ms_labels(alpha)) terms = symbolic_differentiate(terms, l);
    return terms;
}

bool VanishTable::vanishes(const SymbolicTerm& t) const {
    const std::vector<bool>& tab = t.tag == Tag::Q ? q : r;
    if (tab.empty()) return false;
    const int nt = std::min(ms_size(t.mu) + (t.open == Slot::Theta ? 1 : 0), kSide - 1);
    const int nu = std::min(static_cast<int>(t.gamma.size()) + (t.open == Slot::U ? 1 : 0), kSide - 1);
    return tab[static_cast<std::size_t>(nt * kSide + nu)];
}

std::string VanishTable::key() const {
    std::string k;
    for (bool b : r) k += b ? '1' : '0';
    k += '|';
    for (bool b : q) k += b ? '1' : '0';
    return k;
}

Formula to_formula(const TermMap& terms) {
    Formula f(terms.begin(), terms.end());
    std::sort(f.begin(), f.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return f;
}

TermMap formula_start(FormulaKind kind) {
    TermMap m;
    SymbolicTerm t;
    switch (kind) {
        case FormulaKind::Output:
            t.tag = Tag::Q;
            m[t] = 1;
            break;
        case FormulaKind::State:
            t.tag = Tag::R;
            m[t] = 1;
            break;
        case FormulaKind::Adjoint:
        case FormulaKind::Gradient: {
            const Slot s = kind == FormulaKind::Adjoint ? Slot::U : Slot::Theta;
            t.tag = Tag::Q;
            t.open = s;
            m[t] = 1;
            SymbolicTerm r;
            r.tag = Tag::R;
            r.open = s;
            r.has_lambda = true;
            m[r] = 1;
            break;
        }
    }
    return m;
}

namespace {

struct Canonical {
    Multiset alpha = 0;
    std::vector<int> to_actual;  // canonical label -> actual label
};

Canonical canonicalize(Multiset alpha) {
    Canonical c;
    int next = 0;
    for (int l = 0; l < kMaxLabels; ++l) {
        const int k = ms_count(alpha, l);
        if (k == 0) continue;
        c.alpha = ms_add(c.alpha, next, k);
        c.to_actual.push_back(l);
        ++next;
    }
    return c;
}

TermMap pruned(TermMap m, const VanishTable& v) {
    for (auto it = m.begin(); it != m.end();) it = v.vanishes(it->first) ? m.erase(it) : std::next(it);
    return m;
}

std::shared_ptr<const Formula> cached(FormulaKind kind, Multiset canonical_alpha, const VanishTable* prune = nullptr) {
    static std::mutex mu;
    static std::map<std::tuple<int, Multiset, std::string>, std::shared_ptr<const Formula>> cache;
    const auto key = std::make_tuple(static_cast<int>(kind), canonical_alpha, prune ? prune->key() : std::string());
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    TermMap terms = formula_start(kind);
    if (prune) terms = pruned(std::move(terms), *prune);
    for (int l : ms_labels(canonical_alpha)) {
        terms = symbolic_differentiate(terms, l);
        if (prune) terms = pruned(std::move(terms), *prune);
    }
    auto f = std::make_shared<const Formula>(to_formula(terms));
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, f).first->second;
}

}  // namespace

Multiset relabel(Multiset m, const std::vector<int>& to_actual) {
    Multiset out = 0;
    for (std::size_t c = 0; c < to_actual.size(); ++c) {
        const int k = ms_count(m, static_cast<int>(c));
        if (k) out = ms_add(out, to_actual[c], k);
    }
    return out;
}

CanonicalFormula canonical_formula(FormulaKind kind, Multiset alpha, const VanishTable* prune) {
    Canonical c = canonicalize(alpha);
    return {cached(kind, c.alpha, prune), c.to_actual};
}

Formula formula_for(FormulaKind kind, Multiset alpha) {
    Canonical c = canonicalize(alpha);
    const Formula& f = *cached(kind, c.alpha);
    bool identity = true;
    for (std::size_t i = 0; i < c.to_actual.size(); ++i) identity = identity && c.to_actual[i] == static_cast<int>(i);
    if (identity) return f;
    Formula out;
    out.reserve(f.size());
    for (const auto& [t, k] : f) {
        SymbolicTerm n = t;
        n.mu = relabel(t.mu, c.to_actual);
        n.lambda = relabel(t.lambda, c.to_actual);
        for (auto& g : n.gamma) g = relabel(g, c.to_actual);
        std::sort(n.gamma.begin(), n.gamma.end());
        out.emplace_back(std::move(n), k);
    }
    return out;
}

std::size_t formula_size(FormulaKind kind, Multiset alpha) { return cached(kind, canonicalize(alpha).alpha)->size(); }

}  // namespace t4s
