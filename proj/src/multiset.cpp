#include "t4s/multiset.hpp"

#include <algorithm>
#include <stdexcept>

namespace t4s {

int ms_count(Multiset m, int label) { return static_cast<int>((m >> (4 * label)) & 0xFu); }

Multiset ms_add(Multiset m, int label, int times) {
    if (label < 0 || label >= kMaxLabels) throw std::out_of_range("multiset label out of range");
    if (ms_count(m, label) + times > kMaxMultiplicity) throw std::overflow_error("multiset multiplicity overflow");
    return m + (static_cast<Multiset>(times) << (4 * label));
}

int ms_size(Multiset m) {
    int s = 0;
    for (int l = 0; l < kMaxLabels; ++l) s += ms_count(m, l);
    return s;
}

bool ms_contains(Multiset big, Multiset small) {
    for (int l = 0; l < kMaxLabels; ++l)
        if (ms_count(small, l) > ms_count(big, l)) return false;
    return true;
}

Multiset ms_minus(Multiset big, Multiset small) {
    if (!ms_contains(big, small)) throw std::invalid_argument("not a sub-multiset");
    return big - small;
}

Multiset ms_from_labels(const std::vector<int>& labels) {
    Multiset m = 0;
    for (int l : labels) m = ms_add(m, l);
    return m;
}

std::vector<int> ms_labels(Multiset m) {
    std::vector<int> out;
    for (int l = 0; l < kMaxLabels; ++l)
        for (int c = 0; c < ms_count(m, l); ++c) out.push_back(l);
    return out;
}

std::uint64_t ms_lattice_size(Multiset m) {
    std::uint64_t s = 1;
    for (int l = 0; l < kMaxLabels; ++l) s *= static_cast<std::uint64_t>(ms_count(m, l) + 1);
    return s;
}

bool ms_less(Multiset a, Multiset b) {
    const int sa = ms_size(a), sb = ms_size(b);
    if (sa != sb) return sa < sb;
    return ms_labels(a) < ms_labels(b);
}

std::vector<Multiset> ms_lattice(Multiset m) {
    std::vector<Multiset> out{0};
    for (int l = 0; l < kMaxLabels; ++l) {
        const int c = ms_count(m, l);
        if (c == 0) continue;
        std::vector<Multiset> next;
        for (Multiset s : out)
            for (int k = 0; k <= c; ++k) next.push_back(s + (static_cast<Multiset>(k) << (4 * l)));
        out.swap(next);
    }
    std::sort(out.begin(), out.end(), ms_less);
    return out;
}

std::string ms_to_string(Multiset m) {
    std::string s = "{";
    bool first = true;
    for (int l : ms_labels(m)) {
        if (!first) s += ",";
        s += std::to_string(l);
        first = false;
    }
    return s + "}";
}

}  // namespace t4s
