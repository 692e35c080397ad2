#pragma once

// Random generators shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "gvb/matrix.hpp"
#include "gvb/series.hpp"

namespace gvb::testing {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Up to n_max base generators with degrees in [lo, hi] \ {0}, optional
/// coefficient symbol x.
inline SigPtr random_signature(Rng& rng, int n_max, int lo, int hi, bool with_x = true) {
    int n = uniform(rng, 1, n_max);
    std::vector<Generator> gens;
    for (int i = 0; i < n; ++i) {
        int d;
        do d = uniform(rng, lo, hi); while (d == 0);
        gens.push_back({"g" + std::to_string(i), d, false});
    }
    std::vector<std::string> syms;
    if (with_x) syms.push_back("x");
    return make_signature(gens, syms);
}

inline CoeffExpr random_coeff(Rng& rng, const Signature& sig) {
    int c;
    do c = uniform(rng, -3, 3); while (c == 0);
    CoeffExpr e(c);
    if (sig.has_symbol("x")) {
        switch (uniform(rng, 0, 5)) {
            case 0: e = e * CoeffExpr::symbol("x"); break;
            case 1: e = e + CoeffExpr::symbol("x"); break;
            case 2: e = e / (CoeffExpr::symbol("x") + CoeffExpr(1)); break;
            default: break;
        }
    }
    return e;
}

/// Random homogeneous function of degree k with at most max_terms terms.
inline GradedFunction random_function(Rng& rng, const SigPtr& sig, int k, int W, int max_terms = 6) {
    GradedFunction f(sig, k, W);
    auto idx = enumerate_multiindices(*sig, k, W);
    if (idx.empty()) return f;
    int n = uniform(rng, 1, max_terms);
    for (int i = 0; i < n; ++i) f.add_term(idx[uniform(rng, 0, static_cast<int>(idx.size()) - 1)], random_coeff(rng, *sig));
    return f;
}

/// A degree for which the signature admits at least one multi-index.
inline int random_degree(Rng& rng, const SigPtr& sig, int W) {
    for (int attempt = 0; attempt < 20; ++attempt) {
        int k = uniform(rng, -4, 4);
        if (!enumerate_multiindices(*sig, k, W).empty()) return k;
    }
    return 0;
}

/// Weight >= 1 part of a random degree-k function.
inline GradedFunction random_nilpotent(Rng& rng, const SigPtr& sig, int k, int W, int max_terms = 4) {
    GradedFunction f = random_function(rng, sig, k, W, max_terms);
    if (k == 0) f = series_sub(f, GradedFunction::constant(sig, f.body(), W));
    return f;
}

/// Random matrix with the given degrees in which every entry is a random function.
inline GradedMatrix random_matrix(Rng& rng, const SigPtr& sig, const std::vector<int>& rows,
                                  const std::vector<int>& cols, int W, int max_terms = 3) {
    GradedMatrix m(sig, W, rows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (uniform(rng, 0, 2)) m.set(i, k, random_function(rng, sig, rows[i] - cols[k], W, max_terms));
    return m;
}

inline std::vector<int> random_degrees(Rng& rng, int n, int lo, int hi) {
    std::vector<int> d(n);
    for (auto& x : d) x = uniform(rng, lo, hi);
    return d;
}

/// Square matrix whose degree-zero block is I plus weight >= 1 noise.
inline GradedMatrix random_unipotent_matrix(Rng& rng, const SigPtr& sig, const std::vector<int>& degs, int W) {
    GradedMatrix m = random_matrix(rng, sig, degs, degs, W);
    for (std::size_t i = 0; i < degs.size(); ++i)
        for (std::size_t k = 0; k < degs.size(); ++k)
            if (degs[i] == degs[k]) {
                GradedFunction v = random_nilpotent(rng, sig, 0, W, 2);
                if (i == k) v = series_add(v, GradedFunction::constant(sig, CoeffExpr(1), W));
                m.set(i, k, v);
            }
    return m;
}

}  // namespace gvb::testing
