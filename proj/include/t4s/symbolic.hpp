#pragma once

#include "t4s/multiset.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace t4s {

enum class Tag : std::uint8_t { Q, R };
enum class Slot : std::uint8_t { None, Theta, U };

/// Symbolic partial-derivative term: d_theta^mu d_u^Gamma of tag, optionally
/// paired with incremental adjoint v_Lambda and left open in one slot.
struct SymbolicTerm {
    Tag tag = Tag::Q;
    Slot open = Slot::None;
    bool has_lambda = false;
    Multiset mu = 0;
    Multiset lambda = 0;
    std::vector<Multiset> gamma;  // sorted

    bool operator==(const SymbolicTerm&) const = default;
    bool operator<(const SymbolicTerm& o) const;
};

struct SymbolicTermHash {
    std::size_t operator()(const SymbolicTerm& t) const noexcept;
};

using TermMap = std::unordered_map<SymbolicTerm, std::uint64_t, SymbolicTermHash>;
using Formula = std::vector<std::pair<SymbolicTerm, std::uint64_t>>;

TermMap symbolic_differentiate(const TermMap& terms, int label);
TermMap differentiate_along(TermMap terms, Multiset alpha);
Formula to_formula(const TermMap& terms);

enum class FormulaKind : std::uint8_t {
    Output,    // D^|a| Q
    State,     // D^|a| R
    Adjoint,   // D^|a| (d_u L), Lagrangian L = omega(Q) + v(R)
    Gradient,  // D^|a| (d_theta L)
};

TermMap formula_start(FormulaKind kind);

/// Formula for kind along alpha, computed on the canonical relabeling and
/// cached; terms come back relabeled to alpha's labels.
Formula formula_for(FormulaKind kind, Multiset alpha);
/// Which partial-derivative count pairs (n_theta, n_u) vanish identically,
/// open slot included. Used to prune formulas; must be upward closed.
struct VanishTable {
    static constexpr int kSide = kMaxLabels + 2;
    std::vector<bool> r, q;  // empty: nothing vanishes

    bool vanishes(const SymbolicTerm& t) const;
    std::string key() const;
};

struct CanonicalFormula {
    std::shared_ptr<const Formula> formula;
    std::vector<int> to_actual;  // canonical label -> label of alpha
};
CanonicalFormula canonical_formula(FormulaKind kind, Multiset alpha, const VanishTable* prune = nullptr);
Multiset relabel(Multiset m, const std::vector<int>& to_actual);

/// Size of the formula without relabeling.
std::size_t formula_size(FormulaKind kind, Multiset alpha);

}  // namespace t4s
