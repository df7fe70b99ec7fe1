// SPDX-License-Identifier: Apache-2.0
//
// stlab: adaptive space-time receiver laboratory for multipath DS-CDMA downlinks
// Copyright (C) 2026 stlab contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlab::la {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

// Thrown when a Hermitian factorization meets a pivot at or below the
// scale-invariant zero threshold (1e-12 times the largest diagonal entry).
struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a rank-one inverse update has a denominator of magnitude < 1e-14.
struct DegenerateUpdate : std::runtime_error {
    explicit DegenerateUpdate(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative eigensolver exhausts its iteration cap. Carries the
// eigenpair residual norm at the point of failure.
struct NoConvergence : std::runtime_error {
    double residual;
    NoConvergence(const std::string& what, double res) : std::runtime_error(what), residual(res) {}
};

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Dense complex matrix, row-major storage.
class ComplexMatrix {
  public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return a_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    cplx* row(std::size_t i) { return a_.data() + i * cols_; }
    const cplx* row(std::size_t i) const { return a_.data() + i * cols_; }

    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> a_;
};

inline void check_square(const ComplexMatrix& a, const char* who) {
    if (a.rows() != a.cols())
        throw DimensionMismatch(std::string(who) + ": matrix must be square");
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

// Hermitian inner product <a, b> = sum conj(a_i) b_i.
inline cplx hdot(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("hdot: length mismatch");
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double norm2(const ComplexVector& a) {
    double acc = 0.0;
    for (const cplx& v : a)
        acc += std::norm(v);
    return std::sqrt(acc);
}

inline ComplexVector scaled(ComplexVector a, cplx s) {
    for (cplx& v : a)
        v *= s;
    return a;
}

inline ComplexVector conjugated(ComplexVector a) {
    for (cplx& v : a)
        v = std::conj(v);
    return a;
}

inline ComplexMatrix conjugated(ComplexMatrix a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            a(i, j) = std::conj(a(i, j));
    return a;
}

inline ComplexVector vsub(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("vsub: length mismatch");
    ComplexVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

inline ComplexVector vadd(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("vadd: length mismatch");
    ComplexVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

// ---------------------------------------------------------------------------
// Matrix helpers
// ---------------------------------------------------------------------------

// Conjugate transpose.
inline ComplexMatrix hermitian(const ComplexMatrix& a) {
    ComplexMatrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            r(j, i) = std::conj(a(i, j));
    return r;
}

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matmul: inner dimensions differ");
    ComplexMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0))
                continue;
            const cplx* brow = b.row(k);
            cplx* rrow = r.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j)
                rrow[j] += aik * brow[j];
        }
    }
    return r;
}

inline ComplexVector matvec(const ComplexMatrix& a, const ComplexVector& x) {
    if (a.cols() != x.size())
        throw DimensionMismatch("matvec: dimensions differ");
    ComplexVector r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const cplx* arow = a.row(i);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            acc += arow[j] * x[j];
        r[i] = acc;
    }
    return r;
}

// y = A^H x without forming A^H.
inline ComplexVector matvec_herm(const ComplexMatrix& a, const ComplexVector& x) {
    if (a.rows() != x.size())
        throw DimensionMismatch("matvec_herm: dimensions differ");
    ComplexVector r(a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const cplx* arow = a.row(i);
        const cplx xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j)
            r[j] += std::conj(arow[j]) * xi;
    }
    return r;
}

inline ComplexMatrix madd(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("madd: shapes differ");
    ComplexMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        r.data()[i] = a.data()[i] + b.data()[i];
    return r;
}

inline ComplexMatrix msub(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("msub: shapes differ");
    ComplexMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        r.data()[i] = a.data()[i] - b.data()[i];
    return r;
}

inline ComplexMatrix mscale(ComplexMatrix a, cplx s) {
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        a.data()[i] *= s;
    return a;
}

// A <- A + s * x y^H (general rank-one accumulate).
inline void add_outer(ComplexMatrix& a, cplx s, const ComplexVector& x, const ComplexVector& y) {
    if (a.rows() != x.size() || a.cols() != y.size())
        throw DimensionMismatch("add_outer: shapes differ");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const cplx sx = s * x[i];
        cplx* arow = a.row(i);
        for (std::size_t j = 0; j < y.size(); ++j)
            arow[j] += sx * std::conj(y[j]);
    }
}

inline double frobenius(const ComplexMatrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        acc += std::norm(a.data()[i]);
    return std::sqrt(acc);
}

inline double trace_real(const ComplexMatrix& a) {
    check_square(a, "trace_real");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        acc += a(i, i).real();
    return acc;
}

// A <- (A + A^H)/2. Drops the skew-Hermitian rounding drift that rank-one
// recursions accumulate; a no-op in exact arithmetic for Hermitian input.
inline void resymmetrize(ComplexMatrix& a) {
    check_square(a, "resymmetrize");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = cplx(a(i, i).real(), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx m = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = m;
            a(j, i) = std::conj(m);
        }
    }
}

// ---------------------------------------------------------------------------
// Hermitian positive definite solves
// ---------------------------------------------------------------------------

namespace detail {

// Cholesky factor L with A = L L^H. Pivots at or below 1e-12 times the largest
// diagonal entry of A count as zero and reject the matrix.
inline ComplexMatrix cholesky(const ComplexMatrix& a) {
    check_square(a, "cholesky");
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_diag = std::max(max_diag, std::abs(a(i, i).real()));
    const double tol = 1e-12 * max_diag;
    if (max_diag <= 0.0)
        throw NotPositiveDefinite("cholesky: non-positive diagonal");

    ComplexMatrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cplx acc = a(i, j);
            const cplx* li = l.row(i);
            const cplx* lj = l.row(j);
            for (std::size_t k = 0; k < j; ++k)
                acc -= li[k] * std::conj(lj[k]);
            if (i == j) {
                const double d = acc.real();
                if (d <= tol)
                    throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) +
                                              " at or below tolerance");
                l(i, i) = std::sqrt(d);
            } else {
                l(i, j) = acc / l(j, j).real();
            }
        }
    }
    return l;
}

inline void forward_subst(const ComplexMatrix& l, ComplexVector& b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = b[i];
        const cplx* li = l.row(i);
        for (std::size_t k = 0; k < i; ++k)
            acc -= li[k] * b[k];
        b[i] = acc / li[i].real();
    }
}

inline void backward_subst_herm(const ComplexMatrix& l, ComplexVector& b) {
    const std::size_t n = l.rows();
    for (std::size_t ii = n; ii-- > 0;) {
        cplx acc = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k)
            acc -= std::conj(l.row(k)[ii]) * b[k];
        b[ii] = acc / l.row(ii)[ii].real();
    }
}

}  // namespace detail

// Solves A x = b for Hermitian positive definite A via Cholesky.
inline ComplexVector solve_hermitian(const ComplexMatrix& a, const ComplexVector& b) {
    if (a.rows() != b.size())
        throw DimensionMismatch("solve_hermitian: dimensions differ");
    const ComplexMatrix l = detail::cholesky(a);
    ComplexVector x = b;
    detail::forward_subst(l, x);
    detail::backward_subst_herm(l, x);
    return x;
}

// Solves A X = B columnwise for Hermitian positive definite A.
inline ComplexMatrix solve_hermitian(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionMismatch("solve_hermitian: dimensions differ");
    const ComplexMatrix l = detail::cholesky(a);
    ComplexMatrix x = b;
    ComplexVector col(a.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < a.rows(); ++i)
            col[i] = x(i, j);
        detail::forward_subst(l, col);
        detail::backward_subst_herm(l, col);
        for (std::size_t i = 0; i < a.rows(); ++i)
            x(i, j) = col[i];
    }
    return x;
}

inline ComplexMatrix inverse_hermitian(const ComplexMatrix& a) {
    ComplexMatrix inv = solve_hermitian(a, ComplexMatrix::identity(a.rows()));
    resymmetrize(inv);
    return inv;
}

// ---------------------------------------------------------------------------
// Rank-one inverse recursions
// ---------------------------------------------------------------------------

// Given Pinv = P^-1, returns (P + s x x^H)^-1 by the Sherman-Morrison identity
//   (P + s x x^H)^-1 = Pinv - s (Pinv x)(Pinv x)^H / (1 + s x^H Pinv x).
// s may be negative (downdate). Rejects denominators of magnitude < 1e-14.
inline ComplexMatrix rank_one_inverse(const ComplexMatrix& pinv, const ComplexVector& x, double s) {
    check_square(pinv, "rank_one_inverse");
    if (pinv.rows() != x.size())
        throw DimensionMismatch("rank_one_inverse: dimensions differ");
    ComplexVector k = matvec(pinv, x);
    const double quad = hdot(x, k).real();
    const double denom = 1.0 + s * quad;
    if (std::abs(denom) < 1e-14)
        throw DegenerateUpdate("rank_one_inverse: denominator magnitude " + std::to_string(denom));
    ComplexMatrix r = pinv;
    add_outer(r, -s / denom, k, k);
    resymmetrize(r);
    return r;
}

struct MilFactors {
    ComplexVector k;  // Pinv x, taken before the update
    double c = 0.0;   // Pinv' = (Pinv - c k k^H) / forget
};

// In-place exponentially weighted covariance inverse step: replaces Pinv by
// the exact inverse of (forget * P + gain * x x^H) and returns the gain vector
// and downdate coefficient, so rank-one consequences of the same step (such
// as projected Gram inverses) can be propagated without a fresh inversion.
inline MilFactors mil_update_in_place(ComplexMatrix& pinv, const ComplexVector& x, double forget,
                                      double gain) {
    if (forget <= 0.0)
        throw std::invalid_argument("mil_update: forget must be positive");
    if (gain < 0.0)
        throw std::invalid_argument("mil_update: gain must be nonnegative");
    check_square(pinv, "mil_update");
    if (pinv.rows() != x.size())
        throw DimensionMismatch("mil_update: dimensions differ");
    MilFactors f;
    f.k = matvec(pinv, x);
    const double denom = forget + gain * hdot(x, f.k).real();
    if (std::abs(denom) < 1e-14)
        throw DegenerateUpdate("mil_update: denominator magnitude " + std::to_string(denom));
    f.c = gain / denom;
    add_outer(pinv, -f.c, f.k, f.k);
    const double inv_forget = 1.0 / forget;
    for (std::size_t i = 0; i < pinv.rows() * pinv.cols(); ++i)
        pinv.data()[i] *= inv_forget;
    resymmetrize(pinv);
    return f;
}

// Value-returning form of the same update.
inline ComplexMatrix mil_update(const ComplexMatrix& pinv, const ComplexVector& x, double forget,
                                double gain) {
    ComplexMatrix r = pinv;
    mil_update_in_place(r, x, forget, gain);
    return r;
}

// ---------------------------------------------------------------------------
// Eigenvalue machinery
// ---------------------------------------------------------------------------

struct EigenPair {
    double value = 0.0;
    ComplexVector vector;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double unit_double(std::uint64_t& s) {
    return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

// Rotate so the entry of largest magnitude is real positive.
inline void fix_phase(ComplexVector& v) {
    std::size_t imax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            imax = i;
        }
    }
    if (best <= 0.0)
        return;
    const cplx rot = std::conj(v[imax]) / best;
    for (cplx& e : v)
        e *= rot;
}

}  // namespace detail

// One deflating power-method step: returns (I - shift * gamma) g.
inline ComplexVector deflate_power_step(const ComplexVector& g, const ComplexMatrix& gamma,
                                        double shift) {
    check_square(gamma, "deflate_power_step");
    if (gamma.rows() != g.size())
        throw DimensionMismatch("deflate_power_step: dimensions differ");
    ComplexVector r = matvec(gamma, g);
    for (std::size_t i = 0; i < g.size(); ++i)
        r[i] = g[i] - shift * r[i];
    return r;
}

// Eigenvector of the smallest eigenvalue of a Hermitian PSD matrix, computed
// by power iteration on (I - A / trace(A)). Exits when successive iterates
// align to 1 - 1e-10 and the eigenpair residual is at or below 1e-8 |A|_F;
// gives up after 10 * dimension iterations. The returned vector has unit norm
// and its largest-magnitude entry is real positive.
inline EigenPair smallest_eigvec(const ComplexMatrix& a) {
    check_square(a, "smallest_eigvec");
    const std::size_t n = a.rows();
    if (n == 0)
        throw DimensionMismatch("smallest_eigvec: empty matrix");
    const double fnorm = frobenius(a);
    const double tr = trace_real(a);
    EigenPair out;
    if (tr <= 1e-300 || fnorm <= 1e-300) {
        out.vector.assign(n, 0.0);
        out.vector[0] = 1.0;
        return out;
    }
    const double shift = 1.0 / tr;
    const double resid_tol = 1e-8 * fnorm;

    std::uint64_t seed = 0x5eedULL ^ (static_cast<std::uint64_t>(n) << 17);
    ComplexVector v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = cplx(2.0 * detail::unit_double(seed) - 1.0, 2.0 * detail::unit_double(seed) - 1.0);
    const double nv0 = norm2(v);
    for (cplx& e : v)
        e /= nv0;

    // The contraction rate is set by the eigengap, not the dimension, so the
    // iteration budget keeps a floor that small matrices would otherwise lack.
    const std::size_t cap = std::max<std::size_t>(10 * n, 1000);
    double residual = fnorm;
    for (std::size_t it = 0; it < cap; ++it) {
        ComplexVector u = deflate_power_step(v, a, shift);
        const double nu = norm2(u);
        if (nu <= 1e-300) {
            // v sat exactly on the deflated direction; restart elsewhere.
            for (std::size_t i = 0; i < n; ++i)
                u[i] = cplx(2.0 * detail::unit_double(seed) - 1.0,
                            2.0 * detail::unit_double(seed) - 1.0);
            const double nr = norm2(u);
            for (cplx& e : u)
                e /= nr;
            v = std::move(u);
            continue;
        }
        for (cplx& e : u)
            e /= nu;
        const double align = std::abs(hdot(u, v));
        v = std::move(u);
        if (align >= 1.0 - 1e-10) {
            ComplexVector av = matvec(a, v);
            const double lam = hdot(v, av).real();
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                acc += std::norm(av[i] - lam * v[i]);
            residual = std::sqrt(acc);
            if (residual <= resid_tol) {
                out.value = lam;
                out.vector = std::move(v);
                detail::fix_phase(out.vector);
                return out;
            }
        }
    }
    throw NoConvergence("smallest_eigvec: iteration cap reached", residual);
}

// All eigenvalues of a Hermitian matrix (ascending), by cyclic Jacobi sweeps
// with complex plane rotations. Robust for the small dense matrices used here.
inline std::vector<double> eigvals_hermitian(const ComplexMatrix& a) {
    check_square(a, "eigvals_hermitian");
    const std::size_t n = a.rows();
    ComplexMatrix w = a;
    const double fnorm = frobenius(w);
    if (n == 0)
        return {};
    if (fnorm <= 1e-300) {
        return std::vector<double>(n, 0.0);
    }
    const double tol = 1e-13 * fnorm;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += 2.0 * std::norm(w(i, j));
        if (std::sqrt(off) <= tol)
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = w(p, q);
                const double absa = std::abs(apq);
                if (absa <= 1e-300)
                    continue;
                const double app = w(p, p).real();
                const double aqq = w(q, q).real();
                const cplx phase = apq / absa;
                const double tau = (aqq - app) / (2.0 * absa);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // Columns: B <- B V with V = [[c, s], [-s e^-ib, c e^-ib]].
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx wip = w(i, p);
                    const cplx wiq = w(i, q);
                    w(i, p) = c * wip - s * std::conj(phase) * wiq;
                    w(i, q) = s * wip + c * std::conj(phase) * wiq;
                }
                // Rows: B <- V^H B.
                for (std::size_t j = 0; j < n; ++j) {
                    const cplx wpj = w(p, j);
                    const cplx wqj = w(q, j);
                    w(p, j) = c * wpj - s * phase * wqj;
                    w(q, j) = s * wpj + c * phase * wqj;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = w(i, i).real();
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Singular values (descending) by one-sided Jacobi orthogonalization of the
// columns. Accurate for small singular values, which the rank tests rely on.
inline std::vector<double> singular_values(const ComplexMatrix& b) {
    const std::size_t m = b.rows();
    const std::size_t n = b.cols();
    ComplexMatrix w = b;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0;
                cplx apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += std::norm(w(i, p));
                    aqq += std::norm(w(i, q));
                    apq += std::conj(w(i, p)) * w(i, q);
                }
                if (app <= 1e-300 || aqq <= 1e-300)
                    continue;
                const double absa = std::abs(apq);
                const double rel = absa / std::sqrt(app * aqq);
                worst = std::max(worst, rel);
                if (rel <= 1e-13)
                    continue;
                const cplx phase = apq / absa;
                const double tau = (aqq - app) / (2.0 * absa);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < m; ++i) {
                    const cplx wip = w(i, p);
                    const cplx wiq = w(i, q);
                    w(i, p) = c * wip - s * std::conj(phase) * wiq;
                    w(i, q) = s * wip + c * std::conj(phase) * wiq;
                }
            }
        }
        if (worst <= 1e-13)
            break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            acc += std::norm(w(i, j));
        sv[j] = std::sqrt(acc);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

struct RankResult {
    std::size_t rank = 0;
    // Set when some singular value falls within two decades of the threshold,
    // so the rank decision is sensitive to the tolerance.
    bool near_threshold = false;
};

// Numerical rank: singular values at or below rtol * sigma_max count as zero.
inline RankResult numerical_rank(const ComplexMatrix& b, double rtol = 1e-8) {
    RankResult out;
    const std::vector<double> sv = singular_values(b);
    if (sv.empty() || sv[0] <= 0.0)
        return out;
    const double thresh = rtol * sv[0];
    for (double s : sv) {
        if (s > thresh)
            ++out.rank;
        if (s > thresh / 100.0 && s < thresh * 100.0)
            out.near_threshold = true;
    }
    return out;
}

}  // namespace stlab::la
