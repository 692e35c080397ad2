#pragma once

#include <map>
#include <string>

#include "gvb/error.hpp"

namespace gvb {

inline int parity(int degree) { return degree & 1; }

// (-1)^(a*b), parities only.
inline int koszul(int a, int b) { return (parity(a) & parity(b)) ? -1 : 1; }

/// Finitely supported map degree -> count. Zero counts are never stored.
class GradedDimension {
public:
    GradedDimension() = default;
    GradedDimension(std::initializer_list<std::pair<const int, int>> init) {
        for (auto& [d, c] : init) add(d, c);
    }

    int operator[](int degree) const {
        auto it = counts_.find(degree);
        return it == counts_.end() ? 0 : it->second;
    }

    void add(int degree, int count) {
        if (count < 0) throw Error("negative count in graded dimension");
        if (count == 0) return;
        counts_[degree] += count;
    }

    int total() const {
        int t = 0;
        for (auto& [d, c] : counts_) t += c;
        return t;
    }

    const std::map<int, int>& counts() const { return counts_; }
    bool empty() const { return counts_.empty(); }

    friend bool operator==(const GradedDimension&, const GradedDimension&) = default;

    std::string to_string() const {
        std::string out = "{";
        bool first = true;
        for (auto& [d, c] : counts_) {
            if (!first) out += ", ";
            first = false;
            out += std::to_string(d) + ":" + std::to_string(c);
        }
        return out + "}";
    }

private:
    std::map<int, int> counts_;
};

/// result[k] = d[k + shift]
inline GradedDimension gdim_shift(const GradedDimension& d, int shift) {
    GradedDimension out;
    for (auto& [deg, c] : d.counts()) out.add(deg - shift, c);
    return out;
}

/// result[j] = d[-j]
inline GradedDimension gdim_dual(const GradedDimension& d) {
    GradedDimension out;
    for (auto& [deg, c] : d.counts()) out.add(-deg, c);
    return out;
}

/// result[j] = sum_i a[i] * b[j - i]
inline GradedDimension gdim_convolve(const GradedDimension& a, const GradedDimension& b) {
    GradedDimension out;
    for (auto& [i, ca] : a.counts())
        for (auto& [j, cb] : b.counts()) out.add(i + j, ca * cb);
    return out;
}

}  // namespace gvb
