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

// Linear receiver family for the stacked two-interval observation model.
// Two filter branches per receiver: w extracts the first symbol of a block
// through the direct constraint matrix, wbar the second through the barred
// one. Blind modes keep the code-subspace response pinned to the channel
// estimate (C^H w = nu ghat) while adapting either a constant-modulus or a
// minimum-variance statistic; the trained mode regresses onto known symbols;
// the genie mode solves the Wiener equations with the analytic covariance.
// All recursions cost O(dim^2) per step: covariance inverses advance by
// rank-one inversion-lemma steps and the projected Gram inverses are
// propagated from the same factors instead of being re-inverted.

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "stlab/complexla.hpp"

namespace stlab::rx {

using la::ComplexMatrix;
using la::ComplexVector;
using la::cplx;

// Constraint Gram matrix lost rank: the code-subspace directions collapsed.
struct SingularGamma : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReceiverMode { CCM, CMV, TRAINED };

// Soft symbol estimates of one block: direct branch first, barred second.
// Single-antenna streams carry one symbol per block and leave zbar at zero.
struct SoftPair {
    cplx z = 0.0;
    cplx zbar = 0.0;
};

// Minimum-norm filter in the code subspace satisfying C^H w = nu g.
inline ComplexVector code_matched_start(const ComplexMatrix& cstk, const ComplexVector& g,
                                        double nu) {
    const ComplexMatrix gram = la::matmul(la::hermitian(cstk), cstk);
    ComplexVector rhs = la::scaled(g, nu);
    ComplexVector a;
    try {
        a = la::solve_hermitian(gram, rhs);
    } catch (const la::NotPositiveDefinite&) {
        throw SingularGamma("code_matched_start: code subspace is rank deficient");
    }
    return la::matvec(cstk, a);
}

// Constrained constant-modulus filter from explicit statistics:
//   w = Rinv [d - C (C^H Rinv C)^-1 (C^H Rinv d - nu g)].
// The constraint C^H w = nu g holds by algebraic cancellation.
inline ComplexVector ccm_closed_form(const ComplexMatrix& rinv, const ComplexVector& d,
                                     const ComplexMatrix& cstk, const ComplexVector& g,
                                     double nu) {
    const ComplexVector rd = la::matvec(rinv, d);
    ComplexVector rhs = la::vsub(la::matvec_herm(cstk, rd), la::scaled(g, nu));
    const ComplexMatrix rc = la::matmul(rinv, cstk);
    const ComplexMatrix gamma = la::matmul(la::hermitian(cstk), rc);
    ComplexVector x;
    try {
        x = la::solve_hermitian(gamma, rhs);
    } catch (const la::NotPositiveDefinite&) {
        throw SingularGamma("ccm_closed_form: constraint Gram is singular");
    }
    return la::vsub(rd, la::matvec(rc, x));
}

// Constrained minimum-variance filter: w = Rinv C (C^H Rinv C)^-1 nu g.
inline ComplexVector cmv_closed_form(const ComplexMatrix& rinv, const ComplexMatrix& cstk,
                                     const ComplexVector& g, double nu) {
    const ComplexMatrix rc = la::matmul(rinv, cstk);
    const ComplexMatrix gamma = la::matmul(la::hermitian(cstk), rc);
    ComplexVector x;
    try {
        x = la::solve_hermitian(gamma, la::scaled(g, nu));
    } catch (const la::NotPositiveDefinite&) {
        throw SingularGamma("cmv_closed_form: constraint Gram is singular");
    }
    return la::matvec(rc, x);
}

struct ReceiverState {
    ReceiverMode mode = ReceiverMode::CCM;
    double nu = 1.0;
    double alpha = 0.998;
    double delta = 0.01;
    ComplexMatrix cstk;   // direct-branch constraint matrix
    ComplexMatrix cbar;   // barred branch, empty for single-antenna streams

    ComplexVector w, wbar;
    ComplexMatrix rinv;      // weighted covariance inverse of the direct branch
    ComplexMatrix rbarinv;   // barred twin; empty when the window is shared
    ComplexMatrix gamma, gammabar;        // C^H Rinv C per branch
    ComplexMatrix gammainv, gammabarinv;  // their propagated inverses
    ComplexVector d, dbar;   // cross statistics (regression sums when trained)

    bool has_bar() const { return cbar.rows() > 0; }
    // The constant-modulus recursion weights each branch by its own output
    // modulus, so the branches keep separate covariance inverses. The other
    // modes weight both branches identically and share one.
    const ComplexMatrix& rbar_inv() const { return rbarinv.rows() > 0 ? rbarinv : rinv; }
};

inline ReceiverState make_receiver(ReceiverMode mode, const ComplexMatrix& cstk,
                                   const ComplexMatrix& cbar, const ComplexVector& ghat0,
                                   double nu = 1.0, double alpha = 0.998, double delta = 0.01) {
    if (alpha <= 0.0 || alpha > 1.0)
        throw std::invalid_argument("make_receiver: alpha outside (0, 1]");
    if (delta <= 0.0)
        throw std::invalid_argument("make_receiver: delta must be positive");
    ReceiverState st;
    st.mode = mode;
    st.nu = nu;
    st.alpha = alpha;
    st.delta = delta;
    st.cstk = cstk;
    st.cbar = cbar;
    const std::size_t dim = cstk.rows();

    st.rinv = ComplexMatrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        st.rinv(i, i) = 1.0 / delta;
    if (mode == ReceiverMode::CCM && cbar.rows() > 0)
        st.rbarinv = st.rinv;

    st.d.assign(dim, 0.0);
    st.w = code_matched_start(cstk, ghat0, nu);
    if (cbar.rows() > 0) {
        st.dbar.assign(dim, 0.0);
        st.wbar = code_matched_start(cbar, la::conjugated(ghat0), nu);
    }

    if (mode != ReceiverMode::TRAINED) {
        const ComplexMatrix gram = la::matmul(la::hermitian(cstk), cstk);
        st.gamma = la::mscale(gram, 1.0 / delta);
        st.gammainv = la::mscale(la::inverse_hermitian(gram), delta);
        if (cbar.rows() > 0) {
            const ComplexMatrix gram_bar = la::matmul(la::hermitian(cbar), cbar);
            st.gammabar = la::mscale(gram_bar, 1.0 / delta);
            st.gammabarinv = la::mscale(la::inverse_hermitian(gram_bar), delta);
        }
    }
    return st;
}

namespace detail {

// Applies the rank-one consequence of a covariance MIL step to the projected
// Gram Gamma = C^H Rinv C and its inverse: with q = C^H k,
//   Gamma' = (Gamma - c q q^H) / forget,  inverted by one more lemma step.
inline void propagate_gamma(ComplexMatrix& gamma, ComplexMatrix& gammainv,
                            const ComplexMatrix& cstk, const la::MilFactors& f, double forget) {
    const ComplexVector q = la::matvec_herm(cstk, f.k);
    gammainv = la::mscale(la::rank_one_inverse(gammainv, q, -f.c), forget);
    la::add_outer(gamma, -f.c, q, q);
    const double s = 1.0 / forget;
    for (std::size_t i = 0; i < gamma.rows() * gamma.cols(); ++i)
        gamma.data()[i] *= s;
    la::resymmetrize(gamma);
}

inline void exp_average(ComplexVector& d, const ComplexVector& y, cplx coeff, double alpha) {
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = alpha * d[i] + coeff * y[i];
}

// w = Rinv [d - C Gammainv (C^H Rinv d - nu g)] using the propagated inverse.
inline ComplexVector refresh_cm(const ComplexMatrix& rinv, const ComplexVector& d,
                                const ComplexMatrix& cstk, const ComplexMatrix& gammainv,
                                const ComplexVector& g, double nu) {
    const ComplexVector rd = la::matvec(rinv, d);
    ComplexVector rhs = la::vsub(la::matvec_herm(cstk, rd), la::scaled(g, nu));
    const ComplexVector x = la::matvec(gammainv, rhs);
    return la::vsub(rd, la::matvec(rinv, la::matvec(cstk, x)));
}

// w = Rinv C Gammainv nu g using the propagated inverse.
inline ComplexVector refresh_mv(const ComplexMatrix& rinv, const ComplexMatrix& cstk,
                                const ComplexMatrix& gammainv, const ComplexVector& g,
                                double nu) {
    const ComplexVector x = la::matvec(gammainv, la::scaled(g, nu));
    return la::matvec(rinv, la::matvec(cstk, x));
}

}  // namespace detail

// Statistics half of the constant-modulus step: a-priori soft outputs, then
// the modulus-weighted covariance, projected Gram, and cross-vector updates.
// Split from the filter refresh so a channel tracker can consume the updated
// Gram matrices before the filters are rebuilt against the new estimate.
inline SoftPair ccm_rls_absorb(ReceiverState& st, const ComplexVector& y) {
    SoftPair out;
    out.z = la::hdot(st.w, y);
    const double one_minus = 1.0 - st.alpha;
    const la::MilFactors f =
        la::mil_update_in_place(st.rinv, y, st.alpha, one_minus * std::norm(out.z));
    detail::propagate_gamma(st.gamma, st.gammainv, st.cstk, f, st.alpha);
    detail::exp_average(st.d, y, one_minus * std::conj(out.z), st.alpha);
    if (st.has_bar()) {
        out.zbar = la::hdot(st.wbar, y);
        const la::MilFactors fb =
            la::mil_update_in_place(st.rbarinv, y, st.alpha, one_minus * std::norm(out.zbar));
        detail::propagate_gamma(st.gammabar, st.gammabarinv, st.cbar, fb, st.alpha);
        detail::exp_average(st.dbar, y, one_minus * std::conj(out.zbar), st.alpha);
    }
    return out;
}

// Filter refresh against the current channel estimate.
inline void ccm_rls_refresh(ReceiverState& st, const ComplexVector& ghat) {
    st.w = detail::refresh_cm(st.rinv, st.d, st.cstk, st.gammainv, ghat, st.nu);
    if (st.has_bar())
        st.wbar = detail::refresh_cm(st.rbar_inv(), st.dbar, st.cbar, st.gammabarinv,
                                     la::conjugated(ghat), st.nu);
}

inline SoftPair ccm_rls_step(ReceiverState& st, const ComplexVector& y,
                             const ComplexVector& ghat) {
    SoftPair out = ccm_rls_absorb(st, y);
    ccm_rls_refresh(st, ghat);
    return out;
}

// Minimum-variance twin: unit weight, one shared covariance inverse, both
// projected Grams propagated from the same rank-one factors.
inline SoftPair cmv_rls_absorb(ReceiverState& st, const ComplexVector& y) {
    SoftPair out;
    out.z = la::hdot(st.w, y);
    if (st.has_bar())
        out.zbar = la::hdot(st.wbar, y);
    const la::MilFactors f = la::mil_update_in_place(st.rinv, y, st.alpha, 1.0 - st.alpha);
    detail::propagate_gamma(st.gamma, st.gammainv, st.cstk, f, st.alpha);
    if (st.has_bar())
        detail::propagate_gamma(st.gammabar, st.gammabarinv, st.cbar, f, st.alpha);
    return out;
}

inline void cmv_rls_refresh(ReceiverState& st, const ComplexVector& ghat) {
    st.w = detail::refresh_mv(st.rinv, st.cstk, st.gammainv, ghat, st.nu);
    if (st.has_bar())
        st.wbar = detail::refresh_mv(st.rinv, st.cbar, st.gammabarinv, la::conjugated(ghat),
                                     st.nu);
}

inline SoftPair cmv_rls_step(ReceiverState& st, const ComplexVector& y,
                             const ComplexVector& ghat) {
    SoftPair out = cmv_rls_absorb(st, y);
    cmv_rls_refresh(st, ghat);
    return out;
}

// Exponentially weighted regression onto known symbols, one target per
// branch. A zero symbol pair marks an absent training block and leaves the
// state untouched. The weighted sums grow (no 1-alpha factor), so alpha = 1
// reproduces batch ridge least squares including the delta I start.
inline SoftPair trained_rls_step(ReceiverState& st, const ComplexVector& y, cplx b, cplx bbar) {
    SoftPair out;
    out.z = la::hdot(st.w, y);
    if (st.has_bar())
        out.zbar = la::hdot(st.wbar, y);
    if (b == cplx(0.0) && bbar == cplx(0.0))
        return out;
    la::mil_update_in_place(st.rinv, y, st.alpha, 1.0);
    detail::exp_average(st.d, y, std::conj(b), st.alpha);
    st.w = la::matvec(st.rinv, st.d);
    if (st.has_bar()) {
        detail::exp_average(st.dbar, y, std::conj(bbar), st.alpha);
        st.wbar = la::matvec(st.rinv, st.dbar);
    }
    return out;
}

// Wiener filters per branch from the analytic covariance:
//   w = A1 Rexact^-1 (C g),  wbar = A1 Rexact^-1 (Cbar conj(g)).
// Rexact must already carry the noise floor on its diagonal; the noise power
// argument documents the operating point and is only validated here.
struct MmseFilters {
    ComplexVector w, wbar;
};

inline MmseFilters mmse_oracle(const ComplexMatrix& rexact, const ComplexMatrix& cstk,
                               const ComplexMatrix& cbar, const ComplexVector& g, double a1,
                               double sigma2) {
    if (sigma2 < 0.0)
        throw std::invalid_argument("mmse_oracle: negative noise power");
    MmseFilters out;
    ComplexVector p = la::matvec(cstk, g);
    out.w = la::scaled(la::solve_hermitian(rexact, p), a1);
    if (cbar.rows() > 0) {
        ComplexVector pb = la::matvec(cbar, la::conjugated(g));
        out.wbar = la::scaled(la::solve_hermitian(rexact, pb), a1);
    }
    return out;
}

// Quadrant slicer: sign(Re z) + j sign(Im z) with sign(0) := +1.
inline cplx detect(cplx z) {
    return cplx(z.real() >= 0.0 ? 1.0 : -1.0, z.imag() >= 0.0 ? 1.0 : -1.0);
}

// ---------------------------------------------------------------------------
// Receive-antenna combining
// ---------------------------------------------------------------------------

enum class CombinerMode { EGC, MRC };

struct CombinerConfig {
    CombinerMode mode = CombinerMode::EGC;
    std::vector<std::array<double, 2>> gains;  // per (antenna, branch)
};

inline CombinerConfig egc_config(std::size_t n_rx) {
    CombinerConfig cfg;
    cfg.mode = CombinerMode::EGC;
    cfg.gains.assign(n_rx, {1.0, 1.0});
    return cfg;
}

// Ratio combining: gains proportional to the per-antenna channel norms,
// normalized so the squared gains sum to the antenna count. All-zero norms
// (no usable channel estimate) fall back to unit gains.
inline CombinerConfig mrc_config(const std::vector<double>& branch_norms) {
    CombinerConfig cfg;
    cfg.mode = CombinerMode::MRC;
    double p = 0.0;
    for (double v : branch_norms)
        p += v * v;
    if (p < 1e-300) {
        cfg.gains.assign(branch_norms.size(), {1.0, 1.0});
        return cfg;
    }
    const double scale = std::sqrt(static_cast<double>(branch_norms.size()) / p);
    for (double v : branch_norms)
        cfg.gains.push_back({v * scale, v * scale});
    return cfg;
}

inline SoftPair combine(const std::vector<SoftPair>& z, const CombinerConfig& cfg) {
    if (z.size() != cfg.gains.size())
        throw la::DimensionMismatch("combine: branch count mismatch");
    SoftPair out;
    for (std::size_t m = 0; m < z.size(); ++m) {
        out.z += cfg.gains[m][0] * z[m].z;
        out.zbar += cfg.gains[m][1] * z[m].zbar;
    }
    return out;
}

}  // namespace stlab::rx
