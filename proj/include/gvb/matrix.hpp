#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvb/error.hpp"
#include "gvb/grading.hpp"
#include "gvb/series.hpp"

namespace gvb {

/// Rectangular matrix of graded functions. Entry (i, k) has degree
/// row_degrees[i] - col_degrees[k].
class GradedMatrix {
public:
    GradedMatrix(SigPtr sig, int max_weight, std::vector<int> row_degrees, std::vector<int> col_degrees)
        : sig_(std::move(sig)), W_(max_weight), rows_(std::move(row_degrees)), cols_(std::move(col_degrees)) {
        entries_.reserve(rows_.size() * cols_.size());
        for (int r : rows_)
            for (int c : cols_) entries_.emplace_back(sig_, r - c, W_);
    }

    const SigPtr& sig() const { return sig_; }
    int max_weight() const { return W_; }
    const std::vector<int>& row_degrees() const { return rows_; }
    const std::vector<int>& col_degrees() const { return cols_; }
    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_.size(); }
    bool square() const { return rows_.size() == cols_.size(); }

    const GradedFunction& at(std::size_t i, std::size_t k) const { return entries_[i * cols_.size() + k]; }

    void set(std::size_t i, std::size_t k, const GradedFunction& f) {
        int want = rows_[i] - cols_[k];
        if (!same_signature(f.sig(), sig_)) throw Error("matrix entry has the wrong signature");
        if (f.is_zero()) {
            entries_[i * cols_.size() + k] = GradedFunction(sig_, want, W_);
            return;
        }
        if (f.degree() != want)
            throw DegreeError("entry (" + std::to_string(i) + "," + std::to_string(k) + ") has degree " +
                              std::to_string(f.degree()) + ", expected " + std::to_string(want));
        entries_[i * cols_.size() + k] = f.rebased(sig_).truncated(W_);
    }

    bool is_zero() const {
        return std::all_of(entries_.begin(), entries_.end(), [](const GradedFunction& f) { return f.is_zero(); });
    }

    GradedMatrix truncated(int W) const {
        GradedMatrix out(sig_, std::min(W, W_), rows_, cols_);
        for (std::size_t n = 0; n < entries_.size(); ++n) out.entries_[n] = entries_[n].truncated(out.W_);
        return out;
    }

    GradedMatrix rebased(SigPtr sig) const {
        GradedMatrix out(sig, W_, rows_, cols_);
        for (std::size_t n = 0; n < entries_.size(); ++n) out.entries_[n] = entries_[n].rebased(sig);
        return out;
    }

    /// Same entries under new degree labels.
    GradedMatrix with_degrees(std::vector<int> row_degrees, std::vector<int> col_degrees) const {
        GradedMatrix out(sig_, W_, std::move(row_degrees), std::move(col_degrees));
        if (out.rows() != rows() || out.cols() != cols()) throw ShapeError("with_degrees: shape mismatch");
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t k = 0; k < cols(); ++k) out.set(i, k, at(i, k));
        return out;
    }

    friend bool operator==(const GradedMatrix& a, const GradedMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
    }

    /// Rows of rendered entries, e.g. [[1, -theta], [xi, 1]].
    std::string to_string() const {
        std::string out = "[";
        for (std::size_t i = 0; i < rows(); ++i) {
            out += i ? ", [" : "[";
            for (std::size_t k = 0; k < cols(); ++k) out += (k ? ", " : "") + at(i, k).to_string();
            out += "]";
        }
        return out + "]";
    }

private:
    SigPtr sig_;
    int W_;
    std::vector<int> rows_, cols_;
    std::vector<GradedFunction> entries_;
};

inline GradedMatrix identity(SigPtr sig, const std::vector<int>& degrees, int W) {
    GradedMatrix out(sig, W, degrees, degrees);
    for (std::size_t i = 0; i < degrees.size(); ++i) out.set(i, i, GradedFunction::constant(sig, CoeffExpr(1), W));
    return out;
}

inline GradedMatrix mat_mul(const GradedMatrix& a, const GradedMatrix& b) {
    if (a.col_degrees() != b.row_degrees())
        throw ShapeError("mat_mul: column degrees of the left factor differ from row degrees of the right factor");
    if (!same_signature(a.sig(), b.sig())) throw Error("mat_mul: signature mismatch");
    GradedMatrix out(a.sig(), std::min(a.max_weight(), b.max_weight()), a.row_degrees(), b.col_degrees());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            GradedFunction acc(a.sig(), a.row_degrees()[i] - b.col_degrees()[j], out.max_weight());
            for (std::size_t k = 0; k < a.cols(); ++k) {
                if (a.at(i, k).is_zero() || b.at(k, j).is_zero()) continue;
                acc = series_add(acc, series_mul(a.at(i, k), b.at(k, j)));
            }
            out.set(i, j, acc);
        }
    return out;
}

inline GradedMatrix mat_add(const GradedMatrix& a, const GradedMatrix& b) {
    if (a.row_degrees() != b.row_degrees() || a.col_degrees() != b.col_degrees())
        throw ShapeError("mat_add: shape or degree mismatch");
    GradedMatrix out(a.sig(), std::min(a.max_weight(), b.max_weight()), a.row_degrees(), a.col_degrees());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) out.set(i, k, series_add(a.at(i, k), b.at(i, k)));
    return out;
}

inline GradedMatrix mat_neg(const GradedMatrix& a) {
    GradedMatrix out(a.sig(), a.max_weight(), a.row_degrees(), a.col_degrees());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) out.set(i, k, series_neg(a.at(i, k)));
    return out;
}

inline GradedMatrix mat_sub(const GradedMatrix& a, const GradedMatrix& b) { return mat_add(a, mat_neg(b)); }

/// Every entry multiplied by a degree-0 function (which is central).
inline GradedMatrix mat_scale(const GradedFunction& f, const GradedMatrix& a) {
    if (f.degree() != 0) throw DegreeError("mat_scale needs a degree-0 scalar");
    GradedMatrix out(a.sig(), std::min(a.max_weight(), f.max_weight()), a.row_degrees(), a.col_degrees());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            if (!a.at(i, k).is_zero()) out.set(i, k, series_mul(f, a.at(i, k)));
    return out;
}

inline GradedMatrix operator*(const GradedMatrix& a, const GradedMatrix& b) { return mat_mul(a, b); }
inline GradedMatrix operator+(const GradedMatrix& a, const GradedMatrix& b) { return mat_add(a, b); }
inline GradedMatrix operator-(const GradedMatrix& a, const GradedMatrix& b) { return mat_sub(a, b); }

inline GradedMatrix substitute(const GradedMatrix& a, const Substitution& s, int W = -1) {
    int w = W < 0 ? a.max_weight() : std::min(W, a.max_weight());
    std::vector<GradedFunction> images;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            images.push_back(substitute(a.at(i, k), s, w));
            w = std::min(w, images.back().max_weight());
        }
    GradedMatrix out(s.target, w, a.row_degrees(), a.col_degrees());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) out.set(i, k, images[i * a.cols() + k]);
    return out;
}

/// Residual entries of a - b at weight <= W, rendered as "(i,k): term"; empty when they agree.
inline std::vector<std::string> matrix_residuals(const GradedMatrix& a, const GradedMatrix& b, int W,
                                                 const Point* jet = nullptr) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return {"shape mismatch"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            if (!agrees_through(a.at(i, k), b.at(i, k), W, jet)) {
                GradedFunction r = series_sub(a.at(i, k).truncated(W), b.at(i, k).truncated(W));
                out.push_back("(" + std::to_string(i) + "," + std::to_string(k) + "): " + r.to_string());
            }
    return out;
}

inline bool matrices_agree(const GradedMatrix& a, const GradedMatrix& b, int W, const Point* jet = nullptr) {
    return matrix_residuals(a, b, W, jet).empty();
}

/// Entries in slots whose row and column degrees coincide; zero elsewhere.
inline GradedMatrix degree_zero_block(const GradedMatrix& f) {
    if (!f.square()) throw ShapeError("degree_zero_block needs a square matrix");
    GradedMatrix out(f.sig(), f.max_weight(), f.row_degrees(), f.col_degrees());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t k = 0; k < f.cols(); ++k)
            if (f.row_degrees()[i] == f.col_degrees()[k]) out.set(i, k, f.at(i, k));
    return out;
}

struct DetAdj {
    GradedFunction det;
    GradedMatrix adj;
};

namespace detail {

// Laplace expansion along the first listed row; degree-0 entries commute.
inline GradedFunction minor_det(const GradedMatrix& e, std::vector<std::size_t> rows, std::vector<std::size_t> cols,
                                int W) {
    if (rows.empty()) return GradedFunction::constant(e.sig(), CoeffExpr(1), W);
    std::size_t r = rows.front();
    std::vector<std::size_t> rest(rows.begin() + 1, rows.end());
    GradedFunction acc(e.sig(), 0, W);
    for (std::size_t n = 0; n < cols.size(); ++n) {
        const GradedFunction& a = e.at(r, cols[n]);
        if (a.is_zero()) continue;
        std::vector<std::size_t> sub = cols;
        sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(n));
        GradedFunction m = series_mul(a, minor_det(e, rest, sub, W));
        acc = series_add(acc, (n & 1) ? series_neg(m) : m);
    }
    return acc;
}

}  // namespace detail

/// Determinant and adjugate of a square matrix whose nonzero entries all have
/// degree 0. The adjugate has rows indexed by E's columns.
inline DetAdj det_adj_deg0(const GradedMatrix& e) {
    if (!e.square()) throw ShapeError("det_adj_deg0 needs a square matrix");
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t k = 0; k < e.cols(); ++k)
            if (!e.at(i, k).is_zero() && e.at(i, k).degree() != 0)
                throw DegreeError("det_adj_deg0: entry (" + std::to_string(i) + "," + std::to_string(k) +
                                  ") has nonzero degree");
    std::size_t n = e.rows();
    int W = e.max_weight();
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    GradedFunction det = detail::minor_det(e, all, all, W);
    GradedMatrix adj(e.sig(), W, e.col_degrees(), e.row_degrees());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            // adj(k, i) = (-1)^{i+k} det of E without row i and column k
            std::vector<std::size_t> rows = all, cols = all;
            rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(i));
            cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(k));
            GradedFunction c = detail::minor_det(e, rows, cols, W);
            if (c.is_zero()) continue;
            adj.set(k, i, ((i + k) & 1) ? series_neg(c) : c);
        }
    return {det, adj};
}

/// sum_{n=0}^{W} (-F')^n for F' with no nonzero degree-0 entry.
inline GradedMatrix neumann_inverse(const GradedMatrix& fp, int W) {
    if (!fp.square() || fp.row_degrees() != fp.col_degrees())
        throw ShapeError("neumann_inverse needs equal row and column degrees");
    for (std::size_t i = 0; i < fp.rows(); ++i)
        for (std::size_t k = 0; k < fp.cols(); ++k)
            if (fp.row_degrees()[i] == fp.col_degrees()[k] && !fp.at(i, k).is_zero())
                throw DegreeError("neumann_inverse: nonzero degree-0 entry (" + std::to_string(i) + "," +
                                  std::to_string(k) + ")");
    int w = std::min(W, fp.max_weight());
    GradedMatrix minus = mat_neg(fp).truncated(w);
    GradedMatrix sum = identity(fp.sig(), fp.row_degrees(), w);
    GradedMatrix term = sum;
    for (int n = 1; n <= w; ++n) {
        term = mat_mul(term, minus);
        if (term.is_zero()) break;
        sum = mat_add(sum, term);
    }
    return sum;
}

/// Two-sided inverse through weight W. Rows of the result carry F's column
/// degrees. Each sample point must give the degree-zero block an invertible body.
inline GradedMatrix invert(const GradedMatrix& f, int W, const std::vector<Point>& sample_points = {}) {
    if (!f.square()) throw ShapeError("invert needs a square matrix");
    int w = std::min(W, f.max_weight());
    GradedMatrix F = f.truncated(w);
    GradedMatrix e = degree_zero_block(F);
    auto [det, adj] = det_adj_deg0(e);
    CoeffExpr body = det.body();
    if (body.is_zero()) throw SingularError("degree-zero block has identically vanishing determinant body");
    for (auto& p : sample_points)
        if (body.evaluate(p) == 0)
            throw SingularError("degree-zero block is singular at (" + point_to_string(p) + "): det body " +
                                body.to_string() + " vanishes");
    GradedMatrix einv = mat_scale(reciprocal(det, w), adj);
    GradedMatrix rest = mat_sub(F, e);
    GradedMatrix gr = mat_mul(neumann_inverse(mat_mul(einv, rest), w), einv);
    GradedMatrix gl = mat_mul(einv, neumann_inverse(mat_mul(rest, einv), w));
    if (!(gr == gl)) throw Error("internal: left and right inverses differ");
    return gr;
}

namespace detail {

inline int odd_positive(int d) { return (d > 0 && parity(d)) ? 1 : 0; }

}  // namespace detail

/// Signed transpose: entry (k, i) of the result is (-1)^{r_i(r_i - c_k) + u(r_i) + u(c_k)} A(i, k),
/// u(d) = 1 for odd positive d. Row degrees become -c, column degrees -r. This
/// reverses products and squares to the identity.
inline GradedMatrix signed_transpose(const GradedMatrix& a) {
    std::vector<int> rows, cols;
    for (int c : a.col_degrees()) rows.push_back(-c);
    for (int r : a.row_degrees()) cols.push_back(-r);
    GradedMatrix out(a.sig(), a.max_weight(), rows, cols);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const GradedFunction& x = a.at(i, k);
            if (x.is_zero()) continue;
            int r = a.row_degrees()[i], c = a.col_degrees()[k];
            int s = parity(r * (r - c)) + detail::odd_positive(r) + detail::odd_positive(c);
            out.set(k, i, (s & 1) ? series_neg(x) : x);
        }
    return out;
}

/// Transition for the dual frame: signed transpose of the inverse.
inline GradedMatrix dual_transpose(const GradedMatrix& t, int W, const std::vector<Point>& sample_points = {}) {
    return signed_transpose(invert(t, W, sample_points));
}

struct NumericBlock {
    std::vector<std::size_t> rows, cols;
    std::vector<std::vector<Rational>> values;
};

/// Body values at a point, one block per degree. Entries between different
/// degrees have nonzero degree and vanish at points, so they are not stored.
struct NumericBlockMatrix {
    std::map<int, NumericBlock> blocks;
};

inline NumericBlockMatrix evaluate_at(const GradedMatrix& f, const Point& point) {
    NumericBlockMatrix out;
    for (std::size_t i = 0; i < f.rows(); ++i) out.blocks[f.row_degrees()[i]].rows.push_back(i);
    for (std::size_t k = 0; k < f.cols(); ++k) out.blocks[f.col_degrees()[k]].cols.push_back(k);
    for (auto& [d, b] : out.blocks) {
        b.values.assign(b.rows.size(), std::vector<Rational>(b.cols.size()));
        for (std::size_t i = 0; i < b.rows.size(); ++i)
            for (std::size_t k = 0; k < b.cols.size(); ++k) b.values[i][k] = body_value(f.at(b.rows[i], b.cols[k]), point);
    }
    return out;
}

/// Rank by fraction-exact Gaussian elimination.
inline int rational_rank(std::vector<std::vector<Rational>> m) {
    if (m.empty()) return 0;
    std::size_t rows = m.size(), cols = m[0].size(), rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[piv], m[rank]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            if (m[r][c] == 0) continue;
            Rational factor = m[r][c] / m[rank][c];
            for (std::size_t k = c; k < cols; ++k) m[r][k] -= factor * m[rank][k];
        }
        ++rank;
    }
    return static_cast<int>(rank);
}

inline GradedDimension graded_rank(const NumericBlockMatrix& b) {
    GradedDimension out;
    for (auto& [d, block] : b.blocks) out.add(d, rational_rank(block.values));
    return out;
}

/// Fiber-map properties from per-degree block ranks.
struct FiberClass {
    GradedDimension rank;
    bool injective = true;
    bool surjective = true;
    bool iso() const { return injective && surjective; }
};

inline FiberClass classify_blocks(const NumericBlockMatrix& b) {
    FiberClass out;
    for (auto& [d, block] : b.blocks) {
        int r = rational_rank(block.values);
        out.rank.add(d, r);
        if (r != static_cast<int>(block.cols.size())) out.injective = false;
        if (r != static_cast<int>(block.rows.size())) out.surjective = false;
    }
    return out;
}

/// Eliminates `count` pivots, each a degree-0 entry with nonzero body at the
/// point, by row operations over the series ring and returns what is left. A
/// nonzero remainder means the image is not locally a direct summand. Returns
/// nullopt when fewer than `count` pivots are available.
inline std::optional<GradedMatrix> schur_after_unit_pivots(GradedMatrix a, const Point& point, int count) {
    for (int step = 0; step < count; ++step) {
        std::optional<std::pair<std::size_t, std::size_t>> piv;
        for (std::size_t i = 0; i < a.rows() && !piv; ++i)
            for (std::size_t k = 0; k < a.cols() && !piv; ++k)
                if (a.row_degrees()[i] == a.col_degrees()[k] && body_value(a.at(i, k), point) != 0) piv = {{i, k}};
        if (!piv) return std::nullopt;
        auto [q, p] = *piv;
        GradedFunction inv = reciprocal(a.at(q, p), a.max_weight());
        std::vector<int> rows, cols;
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (i != q) rows.push_back(a.row_degrees()[i]);
        for (std::size_t k = 0; k < a.cols(); ++k)
            if (k != p) cols.push_back(a.col_degrees()[k]);
        GradedMatrix next(a.sig(), a.max_weight(), rows, cols);
        std::size_t ni = 0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == q) continue;
            GradedFunction factor = series_mul(a.at(i, p), inv);
            std::size_t nk = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                if (k == p) continue;
                GradedFunction v = a.at(i, k);
                if (!factor.is_zero() && !a.at(q, k).is_zero()) v = series_sub(v, series_mul(factor, a.at(q, k)));
                next.set(ni, nk++, v);
            }
            ++ni;
        }
        a = next;
    }
    return a;
}

}  // namespace gvb
