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

// Blind channel estimation for the stacked observation model. Two routes to
// the same subspace idea: a batch path that shrinks the signal subspace by
// powering the whitened covariance inverse and extracts the channel as the
// minimizing eigenvector of the projected quadratic form, and a running
// tracker that applies one deflation step per block to the receiver's
// projected Gram matrices. Estimates carry a global phase ambiguity; a fixed
// reference direction (or the true channel, when a genie is allowed) pins it.

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "stlab/complexla.hpp"

namespace stlab::chest {

using la::ComplexMatrix;
using la::ComplexVector;
using la::cplx;

// The deflation step degenerates when the Gram matrices carry no energy.
struct ZeroTrace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChannelEstimatorState {
    ComplexVector ghat;      // unit norm
    int p = 2;               // whitened-inverse power for the batch path
    cplx phase_ref = 1.0;    // unit scalar fixed at initialization
    ComplexVector ref;       // reference direction for ambiguity removal
    ComplexMatrix cov;       // optional running covariance accumulator
    std::size_t cov_count = 0;
};

// Deterministic start: first canonical direction.
inline ChannelEstimatorState make_estimator(std::size_t dim, int p = 2) {
    if (dim == 0 || p < 1)
        throw std::invalid_argument("make_estimator: bad shape");
    ChannelEstimatorState st;
    st.ghat.assign(dim, 0.0);
    st.ghat[0] = 1.0;
    st.ref = st.ghat;
    st.p = p;
    return st;
}

// Accumulates one observation into the running covariance estimate.
inline void add_covariance_sample(ChannelEstimatorState& st, const ComplexVector& y) {
    if (st.cov.rows() != y.size())
        st.cov = ComplexMatrix(y.size(), y.size());
    la::add_outer(st.cov, 1.0, y, y);
    ++st.cov_count;
}

inline ComplexMatrix sample_covariance(const ChannelEstimatorState& st) {
    if (st.cov_count == 0)
        throw std::invalid_argument("sample_covariance: no samples");
    ComplexMatrix r = st.cov;
    const double s = 1.0 / static_cast<double>(st.cov_count);
    for (std::size_t i = 0; i < r.rows() * r.cols(); ++i)
        r.data()[i] *= s;
    return r;
}

// Mean of the smallest quarter of the eigenvalues: the noise floor of a
// covariance whose signal rank stays below three quarters of the dimension.
inline double estimate_noise_floor(const ComplexMatrix& r) {
    const std::vector<double> vals = la::eigvals_hermitian(r);
    const std::size_t q = std::max<std::size_t>(1, vals.size() / 4);
    double acc = 0.0;
    for (std::size_t i = 0; i < q; ++i)
        acc += vals[i];
    return acc / static_cast<double>(q);
}

// (R / sigma2)^-p. Signal directions shrink geometrically with p while
// pure-noise directions stay at unity, so large p approaches the orthogonal
// projector onto the noise subspace.
inline ComplexMatrix noise_subspace_power(const ComplexMatrix& r, double sigma2, int p) {
    if (sigma2 <= 0.0)
        throw std::invalid_argument("noise_subspace_power: noise power must be positive");
    if (p < 1)
        throw std::invalid_argument("noise_subspace_power: power must be at least 1");
    ComplexMatrix white = r;
    const double s = 1.0 / sigma2;
    for (std::size_t i = 0; i < white.rows() * white.cols(); ++i)
        white.data()[i] *= s;
    const ComplexMatrix inv = la::inverse_hermitian(white);
    ComplexMatrix acc = inv;
    for (int i = 1; i < p; ++i)
        acc = la::matmul(acc, inv);
    la::resymmetrize(acc);
    return acc;
}

struct SubspaceEstimate {
    ComplexVector ghat;       // unit norm, deterministic phase
    bool degenerate = false;  // objective was isotropic: nothing to identify
};

// Channel as the unit minimizer of g^H C^H (R/sigma2)^-p C g. When the noise
// power is not supplied it is read off the covariance spectrum. An isotropic
// projected form carries no channel information; the start direction is
// returned with the degenerate flag set.
inline SubspaceEstimate subspace_channel_svd(const ComplexMatrix& r, const ComplexMatrix& cstk,
                                             int p, std::optional<double> sigma2 = {}) {
    const double s2 = sigma2 ? *sigma2 : estimate_noise_floor(r);
    const ComplexMatrix w = noise_subspace_power(r, s2, p);
    ComplexMatrix phi = la::matmul(la::hermitian(cstk), la::matmul(w, cstk));
    la::resymmetrize(phi);

    SubspaceEstimate out;
    const std::size_t n = phi.rows();
    const double mean_diag = la::trace_real(phi) / static_cast<double>(n);
    ComplexMatrix dev = phi;
    for (std::size_t i = 0; i < n; ++i)
        dev(i, i) -= mean_diag;
    if (la::frobenius(dev) <= 1e-10 * la::frobenius(phi)) {
        out.ghat.assign(n, 0.0);
        out.ghat[0] = 1.0;
        out.degenerate = true;
        return out;
    }
    out.ghat = la::smallest_eigvec(phi).vector;
    return out;
}

namespace detail {

inline void deflate_normalize(ChannelEstimatorState& st, const ComplexMatrix& s) {
    const double tr = la::trace_real(s);
    if (tr <= 1e-14)
        throw ZeroTrace("channel_rls_step: Gram trace vanished");
    st.ghat = la::deflate_power_step(st.ghat, s, 1.0 / tr);
    const double norm = la::norm2(st.ghat);
    if (norm <= 1e-14)
        throw la::DegenerateUpdate("channel_rls_step: iterate vanished");
    for (auto& v : st.ghat)
        v /= norm;
}

}  // namespace detail

// One tracker step from both branches' projected Gram matrices: a deflation
// power step toward the minimizing eigenvector of Gamma + conj(Gammabar),
// then renormalization. The conjugate branch constrains the conjugate of the
// channel, so its Gram acts on the unconjugated channel through its entrywise
// conjugate; summing it literally steers the iterate off the channel
// direction whenever the taps are complex. Using both branches doubles the
// data behind each step.
inline void channel_rls_step(ChannelEstimatorState& st, const ComplexMatrix& gamma,
                             const ComplexMatrix& gammabar) {
    detail::deflate_normalize(st, la::madd(gamma, la::conjugated(gammabar)));
}

// Single-branch variant for streams without a conjugate branch.
inline void channel_rls_step(ChannelEstimatorState& st, const ComplexMatrix& gamma) {
    detail::deflate_normalize(st, gamma);
}

// Rotates ghat so its inner product with the reference direction is real and
// nonnegative. With the true channel as reference this is the genie
// derotation used by fading experiments; with the initial direction it is the
// deterministic ambiguity convention. A vanishing inner product leaves the
// vector unchanged (the reference carries no phase information about it).
inline ComplexVector rotate_to_reference(const ComplexVector& ghat, const ComplexVector& ref) {
    const cplx c = la::hdot(ref, ghat);
    const double mag = std::abs(c);
    if (mag < 1e-14)
        return ghat;
    return la::scaled(ghat, std::conj(c) / mag);
}

inline ComplexVector remove_phase_ambiguity(const ComplexVector& ghat,
                                            const ChannelEstimatorState& st) {
    return rotate_to_reference(ghat, st.ref);
}

// Phase-invariant estimation error: min over global phase of the squared
// distance, equal to |g|^2 + |ghat|^2 - 2 |<ghat, g>|.
inline double channel_mse(const ComplexVector& ghat, const ComplexVector& g_true) {
    const double ng = la::norm2(g_true);
    const double nh = la::norm2(ghat);
    return ng * ng + nh * nh - 2.0 * std::abs(la::hdot(ghat, g_true));
}

}  // namespace stlab::chest
