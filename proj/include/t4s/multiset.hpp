#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace t4s {

// Multiset over direction labels 0..15, packed as 4-bit counts per label.
using Multiset = std::uint64_t;

inline constexpr int kMaxLabels = 16;
inline constexpr int kMaxMultiplicity = 15;

int ms_count(Multiset m, int label);
Multiset ms_add(Multiset m, int label, int times = 1);
int ms_size(Multiset m);
bool ms_contains(Multiset big, Multiset small);
Multiset ms_minus(Multiset big, Multiset small);
Multiset ms_from_labels(const std::vector<int>& labels);
/// Labels in ascending order, repeated by multiplicity.
std::vector<int> ms_labels(Multiset m);
/// Number of sub-multisets, prod(count_i + 1).
std::uint64_t ms_lattice_size(Multiset m);
/// All sub-multisets ordered by cardinality, then lexicographically by label sequence.
std::vector<Multiset> ms_lattice(Multiset m);
bool ms_less(Multiset a, Multiset b);
std::string ms_to_string(Multiset m);

}  // namespace t4s
