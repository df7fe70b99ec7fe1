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

// Executable versions of the design's supporting mathematics: the constant
// modulus cost surface and its convexity condition, the scalar-equivalence
// diagnostic between the weighted and plain covariances, and the user
// capacity and identifiability bounds of the stacked code model. Everything
// here is a pure function producing a small report; the harness serializes
// the reports into its logs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "stlab/complexla.hpp"

namespace stlab::an {

using la::ComplexMatrix;
using la::ComplexVector;
using la::cplx;

using ShapeMismatch = la::DimensionMismatch;

// A rank decision fell within two decades of the singular value threshold;
// the boolean answer would hinge on the tolerance choice.
struct RankTolWarning : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvexityReport {
    double f = 0.0;                // curvature scale at the design point
    double margin = 0.0;           // distance to the convexity boundary
    double hessian_min_eig = 0.0;  // smallest Hessian eigenvalue at zero leakage
    bool convex = false;           // margin >= 0
};

struct EquivalenceReport {
    double beta = 0.0;          // scalar relating weighted and plain covariance
    double residual_rel = 0.0;  // |Rk - beta R|_F / |beta R|_F
    double snr_db = 0.0;
};

struct CapacityReport {
    std::size_t n = 0;       // spreading gain
    std::size_t n_tx = 0;    // transmit antennas
    std::size_t lp = 0;      // channel length bound
    std::size_t qs_max = 0;  // largest signal-plus-interference rank supported
    std::size_t k_max = 0;   // largest admissible user count
};

// Sample mean of (|w^H y|^2 - 1)^2.
inline double cm_cost(const ComplexVector& w, const std::vector<ComplexVector>& ysamples) {
    if (ysamples.empty())
        throw std::invalid_argument("cm_cost: empty sample set");
    double acc = 0.0;
    for (const ComplexVector& y : ysamples) {
        const double m = std::norm(la::hdot(w, y));
        acc += (m - 1.0) * (m - 1.0);
    }
    return acc / static_cast<double>(ysamples.size());
}

struct HessianResult {
    ComplexMatrix h;
    double min_eig = 0.0;
};

// Hessian of the constrained CM cost in the interference coordinates:
// 16(F - 1/4)I + 16|u'|^2 I + 16 u'u'^H - 16 diag(|u'_i|^2). The diagonal
// subtraction cancels the rank-one term entrywise, so every diagonal entry
// equals 16(F - 1/4) + 16|u'|^2.
inline HessianResult hessian_cm(const ComplexVector& uprime, double f) {
    if (uprime.empty())
        throw std::invalid_argument("hessian_cm: empty coordinate vector");
    const std::size_t d = uprime.size();
    double energy = 0.0;
    for (const cplx& u : uprime)
        energy += std::norm(u);

    ComplexMatrix h(d, d);
    const double base = 16.0 * (f - 0.25) + 16.0 * energy;
    for (std::size_t i = 0; i < d; ++i)
        h(i, i) = base;
    la::add_outer(h, 16.0, uprime, uprime);
    for (std::size_t i = 0; i < d; ++i)
        h(i, i) -= 16.0 * std::norm(uprime[i]);
    la::resymmetrize(h);

    HessianResult out;
    out.min_eig = la::eigvals_hermitian(h).front();
    out.h = std::move(h);
    return out;
}

// Convexity condition of the constrained CM cost around the design point.
// Both vectors must be unit norm; the overlap |g^H ghat| carries the whole
// geometry dependence.
inline ConvexityReport convexity_margin(double nu, double a1, const ComplexVector& g,
                                        const ComplexVector& ghat) {
    if (std::abs(la::norm2(g) - 1.0) > 1e-6 || std::abs(la::norm2(ghat) - 1.0) > 1e-6)
        throw std::invalid_argument("convexity_margin: vectors must be unit norm");
    const double overlap = std::abs(la::hdot(g, ghat));
    ConvexityReport rep;
    rep.f = nu * nu * a1 * a1 * overlap;
    rep.margin = nu * a1 * a1 * overlap - 0.25;
    rep.convex = rep.margin >= 0.0;
    rep.hessian_min_eig = hessian_cm(ComplexVector(1, 0.0), rep.f).min_eig;
    return rep;
}

// Diagnostic for how close the weighted covariance sits to a scalar multiple
// of the plain one. No pass/fail: the report carries the relative residual.
inline EquivalenceReport rk_equivalence(const ComplexMatrix& rk, const ComplexMatrix& r,
                                        const ComplexVector& w, const ComplexVector& p1,
                                        double a1, double sigma2) {
    if (rk.rows() != r.rows() || rk.cols() != r.cols())
        throw ShapeMismatch("rk_equivalence: covariance shapes differ");
    if (sigma2 < 0.0)
        throw std::invalid_argument("rk_equivalence: negative noise power");

    EquivalenceReport rep;
    rep.beta = a1 * a1 * (std::norm(la::hdot(w, p1)) + sigma2);
    const ComplexMatrix scaled_r = la::mscale(r, rep.beta);
    const double denom = la::frobenius(scaled_r);
    const double num = la::frobenius(la::msub(rk, scaled_r));
    rep.residual_rel = denom > 0.0 ? num / denom
                                   : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.snr_db = sigma2 > 0.0 ? 10.0 * std::log10(a1 * a1 / sigma2)
                              : std::numeric_limits<double>::infinity();
    return rep;
}

// Load bounds of the stacked code model. The user bound mixes thirds with an
// integer floor, so it is evaluated in integer arithmetic over sixths of a
// user before the final division.
inline CapacityReport capacity_bound(std::size_t n, std::size_t n_tx, std::size_t lp) {
    if (n < 1 || lp < 1 || (n_tx != 1 && n_tx != 2))
        throw std::invalid_argument("capacity_bound: bad configuration");
    CapacityReport rep;
    rep.n = n;
    rep.n_tx = n_tx;
    rep.lp = lp;

    const std::size_t m = n + lp - 1;
    rep.qs_max = n_tx * m - n_tx * lp + 1;

    const long long nt = static_cast<long long>(n_tx);
    const long long nn = static_cast<long long>(n);
    const long long ll = static_cast<long long>(lp);
    // k_max = Nt (N - (Nt-1)/Nt - 2 min{N/3 - (Nt-1)/(3Nt), Lp-1}); the value
    // in units of one third of a user is integral.
    const long long thirds =
        3 * nt * nn - 3 * (nt - 1) - 2 * std::min(nt * nn - (nt - 1), 3 * nt * (ll - 1));
    rep.k_max = static_cast<std::size_t>(thirds / 3);
    return rep;
}

namespace detail {

inline ComplexMatrix hcat(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (b.cols() == 0)
        return a;
    if (a.rows() != b.rows())
        throw ShapeMismatch("hcat: row counts differ");
    ComplexMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j)
            out(i, a.cols() + j) = b(i, j);
    }
    return out;
}

// Intersection dimension of range(c) with the space the columns of x claim
// to span. The claimed column count, not the numerical rank of x, enters the
// inclusion-exclusion so that a degenerate "basis" (two users presenting the
// same signature) surfaces as an enlarged intersection instead of hiding
// behind rank cancellation.
inline std::size_t intersection_dim(const ComplexMatrix& c, const ComplexMatrix& x,
                                    bool& near_tol) {
    const la::RankResult rc = la::numerical_rank(c);
    const la::RankResult rall = la::numerical_rank(hcat(c, x));
    near_tol = near_tol || rc.near_threshold || rall.near_threshold;
    const std::size_t lhs = rc.rank + x.cols();
    return lhs > rall.rank ? lhs - rall.rank : 0;
}

}  // namespace detail

// A user is identifiable when its code subspace meets the span of all users'
// effective signatures in exactly the one-dimensional direction of its own
// signature, on both branches. Empty barred inputs skip the second branch
// (single-antenna streams have none).
inline bool identifiability_check(const ComplexMatrix& cstk, const ComplexMatrix& cbar,
                                  const ComplexMatrix& xbasis, const ComplexMatrix& xbarbasis) {
    bool near_tol = false;
    const std::size_t dim_direct = detail::intersection_dim(cstk, xbasis, near_tol);
    std::size_t dim_bar = 1;
    if (cbar.cols() > 0 || xbarbasis.cols() > 0)
        dim_bar = detail::intersection_dim(cbar, xbarbasis, near_tol);
    if (near_tol)
        throw RankTolWarning("identifiability_check: singular values straddle the rank tolerance");
    return dim_direct == 1 && dim_bar == 1;
}

inline void to_json(nlohmann::json& j, const ConvexityReport& r) {
    j = nlohmann::json{{"f", r.f},
                       {"margin", r.margin},
                       {"hessian_min_eig", r.hessian_min_eig},
                       {"convex", r.convex}};
}

inline void to_json(nlohmann::json& j, const EquivalenceReport& r) {
    j = nlohmann::json{{"beta", r.beta}, {"residual_rel", r.residual_rel}};
    if (std::isfinite(r.snr_db))
        j["snr_db"] = r.snr_db;
    else
        j["snr_db"] = nullptr;
}

inline void to_json(nlohmann::json& j, const CapacityReport& r) {
    j = nlohmann::json{{"n", r.n},
                       {"n_tx", r.n_tx},
                       {"lp", r.lp},
                       {"qs_max", r.qs_max},
                       {"k_max", r.k_max}};
}

}  // namespace stlab::an
