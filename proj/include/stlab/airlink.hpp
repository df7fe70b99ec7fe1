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

// Downlink air interface: spreading codes, chip-shift convolution and
// space-time constraint matrices, orthogonal symbol pairing across two
// transmit antennas, sum-of-sinusoids fading, and a chip-stream synthesizer
// whose windowed output follows the stacked two-interval signal model
//   y_m(i) = sum_k A_k b_k(2i-1) Cstk_k g_m + A_k b_k(2i) Cbar_k conj(g_m)
//            + spillover + noise,    E[n n^H] = sigma^2 I.
// The receiver-side stack conjugates the second interval window; the
// synthesizer books the second transmit antenna's physical impulse response
// as the conjugate of the stored taps so that g_m = [h1; h2] holds literally.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "stlab/complexla.hpp"

namespace stlab::air {

using la::ComplexMatrix;
using la::ComplexVector;
using la::cplx;

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (salt + 0x632be59bd9b4e019ULL));
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ULL;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebULL;
    return s ^ (s >> 31);
}

// ---------------------------------------------------------------------------
// Spreading codes
// ---------------------------------------------------------------------------

// Binary spreading codes with entries +-1/sqrt(N), one per (user, tx antenna).
struct SpreadingSet {
    std::size_t n_users = 0;
    std::size_t n_chips = 0;
    std::size_t n_tx = 0;

    const std::vector<double>& code(std::size_t user, std::size_t tx) const {
        return chips.at(user * n_tx + tx);
    }

    std::vector<std::vector<double>> chips;
};

// Draws distinct random codes. Distinctness is up to global sign, which also
// keeps pairwise cross-correlation magnitudes strictly below one.
inline SpreadingSet gen_spreading_set(std::size_t n_users, std::size_t n_chips, std::size_t n_tx,
                                      std::uint64_t seed) {
    if (n_users == 0 || n_chips < 2 || n_tx == 0 || n_tx > 2)
        throw std::invalid_argument("gen_spreading_set: bad shape");
    const double capacity = std::pow(2.0, static_cast<double>(n_chips - 1));
    if (static_cast<double>(n_users * n_tx) > capacity)
        throw std::invalid_argument("gen_spreading_set: more codes than sign patterns");

    SpreadingSet out;
    out.n_users = n_users;
    out.n_chips = n_chips;
    out.n_tx = n_tx;
    std::mt19937_64 rng(mix_seed(seed, 0xc0de));
    std::set<std::vector<int>> used;
    const double amp = 1.0 / std::sqrt(static_cast<double>(n_chips));
    while (out.chips.size() < n_users * n_tx) {
        std::vector<int> raw(n_chips);
        for (auto& c : raw)
            c = (rng() & 1u) ? 1 : -1;
        std::vector<int> canon = raw;
        if (canon[0] < 0)
            for (auto& c : canon)
                c = -c;
        if (!used.insert(canon).second)
            continue;
        std::vector<double> code(n_chips);
        for (std::size_t i = 0; i < n_chips; ++i)
            code[i] = amp * raw[i];
        out.chips.push_back(std::move(code));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convolution and constraint matrices
// ---------------------------------------------------------------------------

// M x Lp matrix whose j-th column is the code delayed by j chips, M = N+Lp-1.
// Multiplying a tap vector gives the code convolved with the channel.
inline ComplexMatrix build_convolution_matrix(const std::vector<double>& code, std::size_t lp) {
    if (lp == 0 || code.empty())
        throw std::invalid_argument("build_convolution_matrix: bad shape");
    const std::size_t n = code.size();
    const std::size_t m = n + lp - 1;
    ComplexMatrix c(m, lp);
    for (std::size_t j = 0; j < lp; ++j)
        for (std::size_t r = j; r < j + n; ++r)
            c(r, j) = code[r - j];
    return c;
}

// Per-user constraint matrices of the stacked two-interval model. For one
// transmit antenna `stacked` collapses to the plain convolution matrix and the
// conjugate-branch matrix is empty.
struct ConstraintMatrices {
    std::size_t n_tx = 0;
    std::size_t n_chips = 0;
    std::size_t lp = 0;
    ComplexMatrix c1;           // M x Lp
    ComplexMatrix c2;           // M x Lp, empty when n_tx == 1
    ComplexMatrix stacked;      // [[C1, 0], [0, C2]]
    ComplexMatrix stacked_bar;  // [[0, C2], [-C1, 0]], empty when n_tx == 1
};

inline ConstraintMatrices build_constraint_matrices(const SpreadingSet& codes, std::size_t user,
                                                    std::size_t lp) {
    ConstraintMatrices out;
    out.n_tx = codes.n_tx;
    out.n_chips = codes.n_chips;
    out.lp = lp;
    out.c1 = build_convolution_matrix(codes.code(user, 0), lp);
    const std::size_t m = out.c1.rows();
    if (codes.n_tx == 1) {
        out.stacked = out.c1;
        return out;
    }
    out.c2 = build_convolution_matrix(codes.code(user, 1), lp);
    out.stacked = ComplexMatrix(2 * m, 2 * lp);
    out.stacked_bar = ComplexMatrix(2 * m, 2 * lp);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < lp; ++j) {
            out.stacked(i, j) = out.c1(i, j);
            out.stacked(m + i, lp + j) = out.c2(i, j);
            out.stacked_bar(i, lp + j) = out.c2(i, j);
            out.stacked_bar(m + i, j) = -out.c1(i, j);
        }
    }
    return out;
}

// Orthogonal pairing of two symbols over two antennas and two intervals.
// Row = interval, column = antenna: [[c, d], [-conj(d), conj(c)]].
inline ComplexMatrix alamouti_pair(cplx c, cplx d) {
    ComplexMatrix s(2, 2);
    s(0, 0) = c;
    s(0, 1) = d;
    s(1, 0) = -std::conj(d);
    s(1, 1) = std::conj(c);
    return s;
}

// ---------------------------------------------------------------------------
// Fading
// ---------------------------------------------------------------------------

// Sum of 20 equal-amplitude sinusoids with random arrival angles and phases.
// Unit average power; a zero Doppler rate freezes the draw at its t = 0 value.
class ClarkeFader {
  public:
    static constexpr std::size_t n_osc = 20;

    ClarkeFader() = default;
    ClarkeFader(double fd_ts, std::uint64_t seed) : fd_ts_(fd_ts) {
        std::mt19937_64 rng(mix_seed(seed, 0xfade));
        std::uniform_real_distribution<double> u(0.0, 2.0 * 3.14159265358979323846);
        for (std::size_t i = 0; i < n_osc; ++i) {
            cos_aoa_[i] = std::cos(u(rng));
            phase_[i] = u(rng);
        }
    }

    // Gain at absolute time t, in symbol intervals.
    cplx at(double t) const {
        const double two_pi = 2.0 * 3.14159265358979323846;
        cplx acc = 0.0;
        for (std::size_t i = 0; i < n_osc; ++i) {
            const double arg = two_pi * fd_ts_ * t * cos_aoa_[i] + phase_[i];
            acc += cplx(std::cos(arg), std::sin(arg));
        }
        return acc / std::sqrt(static_cast<double>(n_osc));
    }

    // Gain at the current time, then advance by dt symbol intervals.
    cplx step(double dt = 1.0) {
        const cplx g = at(t_);
        t_ += dt;
        return g;
    }

    double fd_ts() const { return fd_ts_; }

  private:
    double fd_ts_ = 0.0;
    double t_ = 0.0;
    double cos_aoa_[n_osc] = {};
    double phase_[n_osc] = {};
};

// ---------------------------------------------------------------------------
// Multipath geometry and channel snapshots
// ---------------------------------------------------------------------------

// Path delays in chips: first path at zero, later paths strictly increasing,
// each gap uniform over what still fits inside the Lp-chip span.
inline std::vector<std::size_t> draw_delays(std::size_t lp, std::size_t n_paths,
                                            std::mt19937_64& rng) {
    if (n_paths == 0 || lp < n_paths)
        throw std::invalid_argument("draw_delays: paths exceed tap span");
    std::vector<std::size_t> d(n_paths);
    d[0] = 0;
    for (std::size_t i = 1; i < n_paths; ++i) {
        // Leave room for the paths still to be placed after this one.
        const std::size_t slack = (lp - 1) - d[i - 1] - (n_paths - 1 - i);
        std::uniform_int_distribution<std::size_t> u(1, slack);
        d[i] = d[i - 1] + u(rng);
    }
    return d;
}

// Path amplitudes from an average-power profile in dB, scaled so the expected
// squared norm of the stacked channel vector is one per receive antenna.
inline std::vector<double> profile_amplitudes(const std::vector<double>& profile_db,
                                              std::size_t n_tx, std::size_t n_paths) {
    if (n_paths == 0 || n_paths > profile_db.size())
        throw std::invalid_argument("profile_amplitudes: bad path count");
    std::vector<double> a(n_paths);
    double p = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        a[i] = std::pow(10.0, profile_db[i] / 20.0);
        p += a[i] * a[i];
    }
    const double scale = 1.0 / std::sqrt(p * static_cast<double>(n_tx));
    for (double& v : a)
        v *= scale;
    return a;
}

// Snapshot of the dense tap vectors, one per (rx antenna, tx antenna).
struct ChannelRealization {
    std::size_t n_tx = 0;
    std::size_t n_rx = 0;
    std::size_t lp = 0;
    std::vector<std::vector<ComplexVector>> taps;  // [rx][tx], length lp each

    // Stacked channel of one receive antenna: tap vectors concatenated in
    // transmit-antenna order, each entry sitting at its delay.
    ComplexVector g(std::size_t rx) const {
        ComplexVector v(n_tx * lp);
        for (std::size_t t = 0; t < n_tx; ++t)
            for (std::size_t l = 0; l < lp; ++l)
                v[t * lp + l] = taps[rx][t][l];
        return v;
    }
};

// Random multipath geometry plus one independent fading bank per
// (rx, tx, path). realize(t) is a pure function of time, so look-ahead needs
// no state rewind.
class ChannelModel {
  public:
    ChannelModel() = default;
    ChannelModel(std::size_t n_tx, std::size_t n_rx, std::size_t lp,
                 const std::vector<double>& profile_db, double fd_ts, std::uint64_t seed)
        : n_tx_(n_tx), n_rx_(n_rx), lp_(lp) {
        const std::size_t n_paths = std::min(profile_db.size(), lp);
        amps_ = profile_amplitudes(profile_db, n_tx, n_paths);
        delays_.resize(n_rx);
        faders_.resize(n_rx);
        for (std::size_t m = 0; m < n_rx; ++m) {
            delays_[m].resize(n_tx);
            faders_[m].resize(n_tx);
            for (std::size_t t = 0; t < n_tx; ++t) {
                std::mt19937_64 rng(mix_seed(seed, 0xde1a ^ (m * 8 + t)));
                delays_[m][t] = draw_delays(lp, n_paths, rng);
                faders_[m][t].resize(n_paths);
                for (std::size_t l = 0; l < n_paths; ++l)
                    faders_[m][t][l] =
                        ClarkeFader(fd_ts, mix_seed(seed, 0xfad0 ^ (m * 64 + t * 8 + l)));
            }
        }
    }

    std::size_t n_tx() const { return n_tx_; }
    std::size_t n_rx() const { return n_rx_; }
    std::size_t lp() const { return lp_; }
    const std::vector<std::size_t>& delays(std::size_t rx, std::size_t tx) const {
        return delays_[rx][tx];
    }

    ChannelRealization realize(double t) const {
        ChannelRealization ch;
        ch.n_tx = n_tx_;
        ch.n_rx = n_rx_;
        ch.lp = lp_;
        ch.taps.resize(n_rx_);
        for (std::size_t m = 0; m < n_rx_; ++m) {
            ch.taps[m].resize(n_tx_);
            for (std::size_t x = 0; x < n_tx_; ++x) {
                ComplexVector h(lp_);
                for (std::size_t l = 0; l < amps_.size(); ++l)
                    h[delays_[m][x][l]] = amps_[l] * faders_[m][x][l].at(t);
                ch.taps[m][x] = std::move(h);
            }
        }
        return ch;
    }

  private:
    std::size_t n_tx_ = 0, n_rx_ = 0, lp_ = 0;
    std::vector<double> amps_;
    std::vector<std::vector<std::vector<std::size_t>>> delays_;
    std::vector<std::vector<std::vector<ClarkeFader>>> faders_;
};

// Unit-modulus quadrature symbols (+-1 +-i)/sqrt(2), one row per user.
inline ComplexMatrix draw_qpsk_packet(std::size_t n_users, std::size_t n_symbols,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x5b5b));
    const double r = 1.0 / std::sqrt(2.0);
    ComplexMatrix b(n_users, n_symbols);
    for (std::size_t k = 0; k < n_users; ++k)
        for (std::size_t j = 0; j < n_symbols; ++j) {
            const auto bits = rng();
            b(k, j) = cplx((bits & 1u) ? r : -r, (bits & 2u) ? r : -r);
        }
    return b;
}

// ---------------------------------------------------------------------------
// Chip-stream synthesis
// ---------------------------------------------------------------------------

struct RxBlock {
    std::size_t block_index = 0;
    std::size_t first_symbol = 0;
    std::size_t n_symbols = 0;            // 2 for two tx antennas, else 1
    std::vector<ComplexVector> y;         // per rx antenna, length n_tx * M
    ComplexMatrix symbols;                // all users x n_symbols, ground truth
};

namespace detail {

// Per-antenna transmit coefficients of every user for one symbol interval.
// Column layout matches alamouti_pair: interval parity selects the row.
inline void interval_coeffs(const ComplexMatrix& packet, std::size_t n_tx, std::size_t interval,
                            std::size_t user, cplx& a1, cplx& a2) {
    if (n_tx == 1) {
        a1 = packet(user, interval);
        a2 = 0.0;
        return;
    }
    const std::size_t blk = interval / 2;
    const cplx c = packet(user, 2 * blk);
    const cplx d = packet(user, 2 * blk + 1);
    if ((interval & 1u) == 0) {
        a1 = c;
        a2 = d;
    } else {
        a1 = -std::conj(d);
        a2 = std::conj(c);
    }
}

}  // namespace detail

struct SynthesisParams {
    std::size_t n_rx = 1;
    std::size_t lp = 1;
    double sigma2 = 0.0;
    std::vector<double> amplitudes;  // per user, including not-yet-active ones
    std::size_t active_users = 0;
    std::uint64_t noise_seed = 0;
};

// Streams windowed observation vectors block by block. Each symbol interval's
// chips are convolved through the current channel snapshot; adjacent-interval
// spillover and the shared noise chips of overlapping windows come out of the
// stream bookkeeping rather than an explicit interference formula. The first
// and last Lp-1 chips of a packet face silence (zeros) outside it.
class StreamSynthesizer {
  public:
    StreamSynthesizer(const SpreadingSet& codes, const ChannelModel& model,
                      const ComplexMatrix& packet, SynthesisParams par)
        : codes_(codes), model_(model), packet_(packet), par_(std::move(par)),
          noise_rng_(mix_seed(par_.noise_seed, 0x0153)), gauss_(0.0, 1.0) {
        if (par_.amplitudes.size() != codes_.n_users || packet_.rows() != codes_.n_users)
            throw la::DimensionMismatch("StreamSynthesizer: user count mismatch");
        n_tx_ = codes_.n_tx;
        n_rx_ = par_.n_rx;
        lp_ = par_.lp;
        m_ = codes_.n_chips + lp_ - 1;
        block_syms_ = (n_tx_ == 2) ? 2 : 1;
        n_blocks_ = packet_.cols() / block_syms_;
        prev_tail_.assign(n_rx_, ComplexVector(lp_ > 0 ? lp_ - 1 : 0));
        noise_carry_.assign(n_rx_, ComplexVector(lp_ > 0 ? lp_ - 1 : 0));
        if (par_.sigma2 > 0.0) {
            const double s = std::sqrt(par_.sigma2 / 2.0);
            for (auto& c : noise_carry_)
                for (auto& v : c)
                    v = cplx(s * gauss_(noise_rng_), s * gauss_(noise_rng_));
        }
    }

    std::size_t n_blocks() const { return n_blocks_; }
    std::size_t block_symbols() const { return block_syms_; }
    std::size_t window_len() const { return m_; }
    std::size_t stack_len() const { return n_tx_ * m_; }

    void set_active_users(std::size_t n) {
        if (n > codes_.n_users)
            throw std::invalid_argument("set_active_users: beyond drawn codes");
        par_.active_users = n;
    }
    std::size_t active_users() const { return par_.active_users; }

    void set_amplitude(std::size_t user, double a) { par_.amplitudes.at(user) = a; }

    // Channel snapshot used for the most recently emitted block.
    const ChannelRealization& current_channel() const { return chan_now_; }

    RxBlock next_block() {
        const std::size_t b = next_block_;
        if (b >= n_blocks_)
            throw std::out_of_range("StreamSynthesizer: packet exhausted");
        ++next_block_;

        const double t_now = static_cast<double>(b * block_syms_);
        chan_now_ = model_.realize(t_now);
        const ChannelRealization chan_next = model_.realize(t_now + block_syms_);

        RxBlock out;
        out.block_index = b;
        out.first_symbol = b * block_syms_;
        out.n_symbols = block_syms_;
        out.symbols = ComplexMatrix(codes_.n_users, block_syms_);
        for (std::size_t k = 0; k < codes_.n_users; ++k)
            for (std::size_t s = 0; s < block_syms_; ++s)
                out.symbols(k, s) = packet_(k, out.first_symbol + s);

        out.y.assign(n_rx_, ComplexVector(n_tx_ * m_));
        for (std::size_t rx = 0; rx < n_rx_; ++rx) {
            if (block_syms_ == 2) {
                const std::size_t j0 = 2 * b;
                const ComplexVector v0 = interval_signal(rx, j0, chan_now_);
                const ComplexVector v1 = interval_signal(rx, j0 + 1, chan_now_);
                const ComplexVector v2 = (b + 1 < n_blocks_)
                                             ? interval_signal(rx, j0 + 2, chan_next)
                                             : ComplexVector(m_);
                ComplexVector wa = assemble_window(v0, prev_tail_[rx], v1);
                ComplexVector wb = assemble_window(v1, tail_of(v0), v2);
                prev_tail_[rx] = tail_of(v1);
                add_noise(rx, wa, wb);
                for (std::size_t t = 0; t < m_; ++t) {
                    out.y[rx][t] = wa[t];
                    out.y[rx][m_ + t] = std::conj(wb[t]);
                }
            } else {
                const ComplexVector v0 = interval_signal(rx, b, chan_now_);
                const ComplexVector v1 = (b + 1 < n_blocks_)
                                             ? interval_signal(rx, b + 1, chan_next)
                                             : ComplexVector(m_);
                ComplexVector w = assemble_window(v0, prev_tail_[rx], v1);
                prev_tail_[rx] = tail_of(v0);
                add_noise_single(rx, w);
                out.y[rx] = std::move(w);
            }
        }
        return out;
    }

  private:
    // Convolved chips of one interval at one receive antenna, length M. The
    // second transmit antenna radiates through the conjugate of its stored
    // taps (see the header note on the receiver-side stacking convention).
    ComplexVector interval_signal(std::size_t rx, std::size_t interval,
                                  const ChannelRealization& chan) const {
        const std::size_t n = codes_.n_chips;
        std::vector<ComplexVector> u(n_tx_, ComplexVector(n));
        for (std::size_t k = 0; k < par_.active_users; ++k) {
            cplx a1, a2;
            detail::interval_coeffs(packet_, n_tx_, interval, k, a1, a2);
            a1 *= par_.amplitudes[k];
            a2 *= par_.amplitudes[k];
            const std::vector<double>& s1 = codes_.code(k, 0);
            for (std::size_t t = 0; t < n; ++t)
                u[0][t] += a1 * s1[t];
            if (n_tx_ == 2) {
                const std::vector<double>& s2 = codes_.code(k, 1);
                for (std::size_t t = 0; t < n; ++t)
                    u[1][t] += a2 * s2[t];
            }
        }
        ComplexVector v(m_);
        for (std::size_t x = 0; x < n_tx_; ++x) {
            const ComplexVector& h = chan.taps[rx][x];
            for (std::size_t l = 0; l < lp_; ++l) {
                const cplx tap = (x == 1) ? std::conj(h[l]) : h[l];
                if (tap == cplx(0.0))
                    continue;
                for (std::size_t t = 0; t < n; ++t)
                    v[t + l] += tap * u[x][t];
            }
        }
        return v;
    }

    ComplexVector tail_of(const ComplexVector& v) const {
        ComplexVector t(lp_ > 0 ? lp_ - 1 : 0);
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = v[codes_.n_chips + i];
        return t;
    }

    // Window = own interval + tail of the previous one + head of the next.
    ComplexVector assemble_window(const ComplexVector& own, const ComplexVector& prev_tail,
                                  const ComplexVector& next) const {
        ComplexVector w = own;
        for (std::size_t i = 0; i + 1 < lp_; ++i) {
            w[i] += prev_tail[i];
            w[codes_.n_chips + i] += next[i];
        }
        return w;
    }

    // Overlapping windows share physical noise chips, so noise is drawn as a
    // stream: Lp-1 chips carried from the previous block, fresh ones after.
    void add_noise(std::size_t rx, ComplexVector& wa, ComplexVector& wb) {
        if (par_.sigma2 <= 0.0)
            return;
        const std::size_t n = codes_.n_chips;
        const std::size_t span = 2 * n + lp_ - 1;
        ComplexVector chips(span);
        const double s = std::sqrt(par_.sigma2 / 2.0);
        for (std::size_t i = 0; i + 1 < lp_; ++i)
            chips[i] = noise_carry_[rx][i];
        for (std::size_t i = lp_ - 1; i < span; ++i)
            chips[i] = cplx(s * gauss_(noise_rng_), s * gauss_(noise_rng_));
        for (std::size_t i = 0; i + 1 < lp_; ++i)
            noise_carry_[rx][i] = chips[span - (lp_ - 1) + i];
        for (std::size_t t = 0; t < m_; ++t) {
            wa[t] += chips[t];
            wb[t] += chips[n + t];
        }
    }

    void add_noise_single(std::size_t rx, ComplexVector& w) {
        if (par_.sigma2 <= 0.0)
            return;
        const std::size_t n = codes_.n_chips;
        const std::size_t span = n + lp_ - 1;
        ComplexVector chips(span);
        const double s = std::sqrt(par_.sigma2 / 2.0);
        for (std::size_t i = 0; i + 1 < lp_; ++i)
            chips[i] = noise_carry_[rx][i];
        for (std::size_t i = lp_ - 1; i < span; ++i)
            chips[i] = cplx(s * gauss_(noise_rng_), s * gauss_(noise_rng_));
        for (std::size_t i = 0; i + 1 < lp_; ++i)
            noise_carry_[rx][i] = chips[span - (lp_ - 1) + i];
        for (std::size_t t = 0; t < m_; ++t)
            w[t] += chips[t];
    }

    SpreadingSet codes_;
    ChannelModel model_;
    ComplexMatrix packet_;
    SynthesisParams par_;
    std::size_t n_tx_ = 0, n_rx_ = 0, lp_ = 0, m_ = 0;
    std::size_t block_syms_ = 0, n_blocks_ = 0, next_block_ = 0;
    std::vector<ComplexVector> prev_tail_;
    std::vector<ComplexVector> noise_carry_;
    ChannelRealization chan_now_;
    std::mt19937_64 noise_rng_;
    std::normal_distribution<double> gauss_;
};

// ---------------------------------------------------------------------------
// Exact second-order statistics
// ---------------------------------------------------------------------------

namespace detail {

// Noise-free windows of the center block when exactly one symbol slot of one
// user carries `value` and every other symbol is zero. Slots range over the
// previous, center, and next block. Extracting linear coefficients this way
// keeps the covariance construction consistent with the stream synthesizer.
inline ComplexVector impulse_window(const SpreadingSet& codes, const ChannelRealization& chan,
                                    std::size_t rx, std::size_t lp, std::size_t user,
                                    std::size_t slot, cplx value) {
    const std::size_t block_syms = (codes.n_tx == 2) ? 2 : 1;
    ComplexMatrix packet(codes.n_users, 3 * block_syms);
    packet(user, slot) = value;

    // Re-create the window algebra directly: intervals of the three blocks.
    const std::size_t n = codes.n_chips;
    const std::size_t m = n + lp - 1;
    const std::size_t n_int = 3 * block_syms;
    std::vector<ComplexVector> v(n_int, ComplexVector(m));
    for (std::size_t j = 0; j < n_int; ++j) {
        std::vector<ComplexVector> u(codes.n_tx, ComplexVector(n));
        for (std::size_t k = 0; k < codes.n_users; ++k) {
            cplx a1, a2;
            interval_coeffs(packet, codes.n_tx, j, k, a1, a2);
            if (a1 != cplx(0.0))
                for (std::size_t t = 0; t < n; ++t)
                    u[0][t] += a1 * codes.code(k, 0)[t];
            if (codes.n_tx == 2 && a2 != cplx(0.0))
                for (std::size_t t = 0; t < n; ++t)
                    u[1][t] += a2 * codes.code(k, 1)[t];
        }
        for (std::size_t x = 0; x < codes.n_tx; ++x) {
            const ComplexVector& h = chan.taps[rx][x];
            for (std::size_t l = 0; l < lp; ++l) {
                const cplx tap = (x == 1) ? std::conj(h[l]) : h[l];
                if (tap == cplx(0.0))
                    continue;
                for (std::size_t t = 0; t < n; ++t)
                    v[j][t + l] += tap * u[x][t];
            }
        }
    }
    auto tail = [&](const ComplexVector& w) {
        ComplexVector t(lp - 1);
        for (std::size_t i = 0; i + 1 < lp; ++i)
            t[i] = w[n + i];
        return t;
    };
    auto window = [&](const ComplexVector& own, const ComplexVector& prev,
                      const ComplexVector& next) {
        ComplexVector w = own;
        for (std::size_t i = 0; i + 1 < lp; ++i) {
            w[i] += prev[i];
            w[n + i] += next[i];
        }
        return w;
    };
    const std::size_t c0 = block_syms;  // first interval of the center block
    if (block_syms == 2) {
        const ComplexVector wa = window(v[c0], tail(v[c0 - 1]), v[c0 + 1]);
        const ComplexVector wb = window(v[c0 + 1], tail(v[c0]), v[c0 + 2]);
        ComplexVector y(2 * m);
        for (std::size_t t = 0; t < m; ++t) {
            y[t] = wa[t];
            y[m + t] = std::conj(wb[t]);
        }
        return y;
    }
    return window(v[c0], tail(v[c0 - 1]), v[c0 + 1]);
}

}  // namespace detail

// Analytic covariance of the stacked observation for a frozen channel:
// R = sum over users and symbol slots of A_k^2 (u u^H + v v^H) + sigma^2 I,
// where u and v are the direct and conjugate coefficient vectors of each slot
// (independent unit-power symbols with vanishing pseudo-moments). Without
// spillover terms the sum keeps only the two per-user signature columns.
inline ComplexMatrix exact_covariance(const SpreadingSet& codes, const ChannelRealization& chan,
                                      std::size_t rx, const std::vector<double>& amplitudes,
                                      std::size_t active_users, double sigma2, bool include_isi) {
    const std::size_t lp = chan.lp;
    const std::size_t m = codes.n_chips + lp - 1;
    const std::size_t dim = codes.n_tx * m;
    ComplexMatrix r(dim, dim);
    const cplx im(0.0, 1.0);

    if (include_isi) {
        const std::size_t block_syms = (codes.n_tx == 2) ? 2 : 1;
        for (std::size_t k = 0; k < active_users; ++k) {
            const double a2 = amplitudes[k] * amplitudes[k];
            for (std::size_t slot = 0; slot < 3 * block_syms; ++slot) {
                const ComplexVector y1 =
                    detail::impulse_window(codes, chan, rx, lp, k, slot, cplx(1.0, 0.0));
                const ComplexVector yi =
                    detail::impulse_window(codes, chan, rx, lp, k, slot, im);
                ComplexVector u(dim), v(dim);
                for (std::size_t t = 0; t < dim; ++t) {
                    u[t] = 0.5 * (y1[t] - im * yi[t]);
                    v[t] = 0.5 * (y1[t] + im * yi[t]);
                }
                la::add_outer(r, a2, u, u);
                la::add_outer(r, a2, v, v);
            }
        }
    } else {
        for (std::size_t k = 0; k < active_users; ++k) {
            const double a2 = amplitudes[k] * amplitudes[k];
            const ConstraintMatrices cm = build_constraint_matrices(codes, k, lp);
            const ComplexVector g = chan.g(rx);
            const ComplexVector p = la::matvec(cm.stacked, g);
            la::add_outer(r, a2, p, p);
            if (codes.n_tx == 2) {
                const ComplexVector pb = la::matvec(cm.stacked_bar, la::conjugated(g));
                la::add_outer(r, a2, pb, pb);
            }
        }
    }
    for (std::size_t i = 0; i < dim; ++i)
        r(i, i) += sigma2;
    la::resymmetrize(r);
    return r;
}

}  // namespace stlab::air
