// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: runs one synthesized packet through a configured
// receiver chain, aggregates packets into Monte Carlo metric series with
// confidence intervals, and writes series to CSV or JSON files.
//
// Detection uses the true channel's instantaneous phase to derotate the blind
// channel estimate before each filter rebuild (ideal phase tracking); with a
// frozen channel this reduces to a single constant reference rotation.

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stlab/airlink.hpp"
#include "stlab/chest.hpp"
#include "stlab/receivers.hpp"
#include "stlab/scenario.hpp"

namespace stlab::xp {

using la::cplx;
using la::ComplexMatrix;
using la::ComplexVector;

enum class SeriesKind { BER_VS_SYMBOL, BER_VS_SNR, BER_VS_K, MSE_VS_SYMBOL };

inline std::string kind_name(SeriesKind k) {
    switch (k) {
        case SeriesKind::BER_VS_SYMBOL: return "BER_VS_SYMBOL";
        case SeriesKind::BER_VS_SNR: return "BER_VS_SNR";
        case SeriesKind::BER_VS_K: return "BER_VS_K";
        case SeriesKind::MSE_VS_SYMBOL: return "MSE_VS_SYMBOL";
    }
    return "BER_VS_SYMBOL";
}

inline SeriesKind kind_from_name(const std::string& s) {
    if (s == "BER_VS_SYMBOL") return SeriesKind::BER_VS_SYMBOL;
    if (s == "BER_VS_SNR") return SeriesKind::BER_VS_SNR;
    if (s == "BER_VS_K") return SeriesKind::BER_VS_K;
    if (s == "MSE_VS_SYMBOL") return SeriesKind::MSE_VS_SYMBOL;
    throw ParseError("unknown series kind \"" + s + "\"");
}

// One aggregated curve. ci_halfwidth is the normal-approximation 95% interval
// half-width across trials; low_confidence marks points whose aggregate error
// count fell below the resolvable floor (fewer than 10 raw errors).
struct MetricSeries {
    SeriesKind kind = SeriesKind::BER_VS_SYMBOL;
    std::string algorithm;
    std::string scenario_digest;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> ci_halfwidth;
    std::vector<std::uint8_t> low_confidence;
};

// Per-packet traces of one receiver chain: running windowed BER and channel
// estimation error per block, plus totals over the settled tail of the packet.
struct TrialResult {
    std::vector<double> sym_x;
    std::vector<double> ber_window;
    std::vector<std::uint64_t> err_window;
    std::vector<double> mse;  // empty for receivers without a channel tracker
    double final_ber = 0.0;
    std::uint64_t final_errors = 0;
    std::uint64_t final_bits = 0;
};

namespace detail {

inline std::uint64_t count_bit_errors(cplx decided, cplx truth) {
    std::uint64_t e = 0;
    if ((decided.real() >= 0.0) != (truth.real() >= 0.0))
        ++e;
    if ((decided.imag() >= 0.0) != (truth.imag() >= 0.0))
        ++e;
    return e;
}

// Interferer amplitudes are log-normal around the desired user's unit power:
// normal in dB with the spread in force when the user enters the packet.
inline std::vector<double> draw_amplitudes(const ScenarioConfig& cfg, std::uint64_t seed) {
    std::vector<double> amps(total_users(cfg), 1.0);
    std::mt19937_64 rng(air::mix_seed(seed, 0x90e5));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t u = 1; u < cfg.k; ++u)
        amps[u] = std::pow(10.0, cfg.interferer_spread_db * gauss(rng) / 20.0);
    std::size_t next = cfg.k;
    for (const auto& ev : cfg.dynamic_events)
        for (std::size_t a = 0; a < ev.users_added; ++a, ++next)
            amps[next] = std::pow(10.0, ev.new_spread_db * gauss(rng) / 20.0);
    return amps;
}

}  // namespace detail

// Runs one packet. The scenario's first snr_db entry and initial user count
// apply; sweeps are expanded by run_monte_carlo into per-point configs.
inline TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t seed) {
    const double snr = cfg.snr_db.front();
    const double sigma2 = sigma2_of_snr(snr);
    const std::size_t users_total = total_users(cfg);

    const air::SpreadingSet codes =
        air::gen_spreading_set(users_total, cfg.n, cfg.n_tx, air::mix_seed(seed, 0xc0d5));
    const air::ChannelModel model(cfg.n_tx, cfg.n_rx, cfg.lp, cfg.power_profile_db, cfg.fd_ts,
                                  air::mix_seed(seed, 0xc4a7));
    const ComplexMatrix packet =
        air::draw_qpsk_packet(users_total, cfg.p_symbols, air::mix_seed(seed, 0xda7a));

    const std::vector<double> amps = detail::draw_amplitudes(cfg, seed);

    air::SynthesisParams par;
    par.n_rx = cfg.n_rx;
    par.lp = cfg.lp;
    par.sigma2 = sigma2;
    par.amplitudes = amps;
    par.active_users = cfg.k;
    par.noise_seed = air::mix_seed(seed, 0x7015);
    air::StreamSynthesizer synth(codes, model, packet, par);

    const air::ConstraintMatrices cm = air::build_constraint_matrices(codes, 0, cfg.lp);
    const std::size_t gdim = cfg.n_tx * cfg.lp;
    const bool blind = cfg.receiver_mode == ReceiverAlgo::CCM ||
                       cfg.receiver_mode == ReceiverAlgo::CMV;
    const bool trained = cfg.receiver_mode == ReceiverAlgo::TRAINED;
    const bool genie = cfg.receiver_mode == ReceiverAlgo::MMSE;

    ComplexVector ghat0(gdim);
    ghat0[0] = 1.0;

    std::vector<rx::ReceiverState> st;
    std::vector<chest::ChannelEstimatorState> est;
    std::vector<rx::MmseFilters> filt(cfg.n_rx);
    for (std::size_t m = 0; m < cfg.n_rx; ++m) {
        if (!genie) {
            const rx::ReceiverMode rm = trained ? rx::ReceiverMode::TRAINED
                                       : cfg.receiver_mode == ReceiverAlgo::CMV
                                           ? rx::ReceiverMode::CMV
                                           : rx::ReceiverMode::CCM;
            st.push_back(rx::make_receiver(rm, cm.stacked, cm.stacked_bar, ghat0, cfg.nu,
                                           cfg.alpha, cfg.delta));
        }
        est.push_back(chest::make_estimator(gdim, cfg.power_exp));
    }

    const std::size_t n_blocks = synth.n_blocks();
    const std::size_t block_syms = synth.block_symbols();
    const std::size_t window_blocks = std::max<std::size_t>(1, 100 / block_syms);
    const std::size_t settle_symbol = cfg.p_symbols / 3;

    TrialResult out;
    out.sym_x.reserve(n_blocks);
    out.ber_window.reserve(n_blocks);
    out.err_window.reserve(n_blocks);
    if (blind)
        out.mse.reserve(n_blocks);

    std::deque<std::pair<std::uint64_t, std::uint64_t>> window;
    std::uint64_t win_err = 0, win_bits = 0;
    std::vector<double> mrc_ema(cfg.n_rx, 1.0);
    std::size_t next_event = 0;
    std::size_t active = cfg.k;
    bool filters_stale = true;

    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t first_symbol = b * block_syms;
        try {
            while (next_event < cfg.dynamic_events.size() &&
                   cfg.dynamic_events[next_event].symbol_index <= first_symbol) {
                active += cfg.dynamic_events[next_event].users_added;
                synth.set_active_users(active);
                ++next_event;
                filters_stale = true;
            }

            const air::RxBlock blk = synth.next_block();
            const air::ChannelRealization& chan = synth.current_channel();
            const cplx b0 = blk.symbols(0, 0);
            const cplx b1 = block_syms == 2 ? blk.symbols(0, 1) : cplx(0.0);

            if (genie && (filters_stale || cfg.fd_ts > 0.0)) {
                // A noiseless operating point leaves the covariance singular;
                // a vanishing ridge keeps the solve defined without moving
                // the filter at any realizable noise level.
                const double s2r = sigma2 > 0.0 ? sigma2 : 1e-9;
                for (std::size_t m = 0; m < cfg.n_rx; ++m) {
                    const ComplexMatrix rex =
                        air::exact_covariance(codes, chan, m, amps, active, s2r, true);
                    filt[m] = rx::mmse_oracle(rex, cm.stacked, cm.stacked_bar, chan.g(m), 1.0,
                                              sigma2);
                }
                filters_stale = false;
            }

            std::vector<rx::SoftPair> soft(cfg.n_rx);
            std::vector<double> norms(cfg.n_rx, 1.0);
            double mse_acc = 0.0;
            for (std::size_t m = 0; m < cfg.n_rx; ++m) {
                const ComplexVector& y = blk.y[m];
                const ComplexVector g_true = chan.g(m);
                if (genie) {
                    soft[m].z = la::hdot(filt[m].w, y);
                    if (cm.stacked_bar.rows() > 0)
                        soft[m].zbar = la::hdot(filt[m].wbar, y);
                    norms[m] = la::norm2(g_true);
                } else if (trained) {
                    soft[m] = rx::trained_rls_step(st[m], y, b0, b1);
                    norms[m] = la::norm2(g_true);
                } else {
                    const bool cm_mode = cfg.receiver_mode == ReceiverAlgo::CCM;
                    soft[m] = cm_mode ? rx::ccm_rls_absorb(st[m], y)
                                      : rx::cmv_rls_absorb(st[m], y);
                    if (st[m].has_bar())
                        chest::channel_rls_step(est[m], st[m].gamma, st[m].gammabar);
                    else
                        chest::channel_rls_step(est[m], st[m].gamma);
                    const ComplexVector gd =
                        chest::rotate_to_reference(est[m].ghat, g_true);
                    if (cm_mode)
                        rx::ccm_rls_refresh(st[m], gd);
                    else
                        rx::cmv_rls_refresh(st[m], gd);
                    mse_acc += chest::channel_mse(est[m].ghat, g_true);
                    const double zmag = block_syms == 2
                                            ? 0.5 * (std::abs(soft[m].z) + std::abs(soft[m].zbar))
                                            : std::abs(soft[m].z);
                    mrc_ema[m] = 0.99 * mrc_ema[m] + 0.01 * zmag;
                    norms[m] = mrc_ema[m];
                }
            }

            rx::CombinerConfig ccfg = cfg.combiner == CombinerKind::MRC && cfg.n_rx > 1
                                          ? rx::mrc_config(norms)
                                          : rx::egc_config(cfg.n_rx);
            const rx::SoftPair zc = rx::combine(soft, ccfg);

            std::uint64_t err = detail::count_bit_errors(zc.z, b0);
            std::uint64_t bits = 2;
            if (block_syms == 2) {
                err += detail::count_bit_errors(zc.zbar, b1);
                bits += 2;
            }

            window.emplace_back(err, bits);
            win_err += err;
            win_bits += bits;
            if (window.size() > window_blocks) {
                win_err -= window.front().first;
                win_bits -= window.front().second;
                window.pop_front();
            }

            out.sym_x.push_back(static_cast<double>(first_symbol + block_syms));
            out.ber_window.push_back(static_cast<double>(win_err) /
                                     static_cast<double>(win_bits));
            out.err_window.push_back(win_err);
            if (blind)
                out.mse.push_back(mse_acc / static_cast<double>(cfg.n_rx));

            if (first_symbol >= settle_symbol) {
                out.final_errors += err;
                out.final_bits += bits;
            }
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "trial failed at symbol " << first_symbol << ": " << e.what();
            throw std::runtime_error(os.str());
        }
    }

    out.final_ber = out.final_bits > 0
                        ? static_cast<double>(out.final_errors) / static_cast<double>(out.final_bits)
                        : 0.0;
    return out;
}

namespace detail {

// Runs trials with seeds base_seed + index across a small worker pool and
// returns them in index order, so aggregation never depends on scheduling.
inline std::vector<TrialResult> run_trials(const ScenarioConfig& cfg) {
    std::vector<TrialResult> results(cfg.trials);
    const std::size_t workers =
        std::min<std::size_t>(cfg.trials,
                              std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t t = 0; t < cfg.trials; ++t)
            results[t] = run_trial(cfg, cfg.base_seed + t);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
                    results[t] = run_trial(cfg, cfg.base_seed + t);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

// Mean and 95% half-width over one point's trial values. Values are summed
// in sorted order, so the aggregate is a function of the value multiset and
// identical under any trial permutation.
inline void aggregate_point(std::vector<double> vals, double& mean, double& ci) {
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (double v : vals)
        s += v;
    const double t = static_cast<double>(vals.size());
    mean = s / t;
    if (vals.size() < 2) {
        ci = 0.0;
        return;
    }
    double q = 0.0;
    for (double v : vals)
        q += (v - mean) * (v - mean);
    const double var = q / (t - 1.0);
    ci = 1.96 * std::sqrt(var / t);
}

}  // namespace detail

// Expands any sweep axis, runs the trials of every point, and aggregates
// into metric series. Sweep scenarios yield one BER curve; plain scenarios
// yield BER vs symbol plus, for receivers with a channel tracker, MSE vs
// symbol.
inline std::vector<MetricSeries> run_monte_carlo(const ScenarioConfig& cfg) {
    const std::string digest = scenario_digest(cfg);
    const std::string algo = algo_name(cfg.receiver_mode);
    std::vector<MetricSeries> out;

    auto sweep_series = [&](SeriesKind kind, const std::vector<double>& xs,
                            auto make_point_cfg) {
        MetricSeries s;
        s.kind = kind;
        s.algorithm = algo;
        s.scenario_digest = digest;
        for (double xv : xs) {
            ScenarioConfig pt = make_point_cfg(xv);
            pt.k_sweep.clear();
            const std::vector<TrialResult> res = detail::run_trials(pt);
            std::vector<double> vals;
            vals.reserve(res.size());
            std::uint64_t raw_err = 0;
            for (const auto& r : res) {
                vals.push_back(r.final_ber);
                raw_err += r.final_errors;
            }
            double mean = 0.0, ci = 0.0;
            detail::aggregate_point(std::move(vals), mean, ci);
            s.x.push_back(xv);
            s.y.push_back(mean);
            s.ci_halfwidth.push_back(ci);
            s.low_confidence.push_back(raw_err < 10 ? 1 : 0);
        }
        out.push_back(std::move(s));
    };

    if (cfg.snr_db.size() > 1) {
        sweep_series(SeriesKind::BER_VS_SNR, cfg.snr_db, [&](double snr) {
            ScenarioConfig pt = cfg;
            pt.snr_db = {snr};
            return pt;
        });
        return out;
    }
    if (!cfg.k_sweep.empty()) {
        std::vector<double> xs;
        for (std::size_t kk : cfg.k_sweep)
            xs.push_back(static_cast<double>(kk));
        sweep_series(SeriesKind::BER_VS_K, xs, [&](double kk) {
            ScenarioConfig pt = cfg;
            pt.k = static_cast<std::size_t>(kk);
            return pt;
        });
        return out;
    }

    const std::vector<TrialResult> res = detail::run_trials(cfg);
    const std::size_t points = res.front().sym_x.size();

    MetricSeries ber;
    ber.kind = SeriesKind::BER_VS_SYMBOL;
    ber.algorithm = algo;
    ber.scenario_digest = digest;
    ber.x = res.front().sym_x;
    for (std::size_t j = 0; j < points; ++j) {
        std::vector<double> vals;
        vals.reserve(res.size());
        std::uint64_t raw_err = 0;
        for (const auto& r : res) {
            vals.push_back(r.ber_window[j]);
            raw_err += r.err_window[j];
        }
        double mean = 0.0, ci = 0.0;
        detail::aggregate_point(std::move(vals), mean, ci);
        ber.y.push_back(mean);
        ber.ci_halfwidth.push_back(ci);
        ber.low_confidence.push_back(raw_err < 10 ? 1 : 0);
    }
    out.push_back(std::move(ber));

    if (!res.front().mse.empty()) {
        MetricSeries mse;
        mse.kind = SeriesKind::MSE_VS_SYMBOL;
        mse.algorithm = algo;
        mse.scenario_digest = digest;
        mse.x = res.front().sym_x;
        for (std::size_t j = 0; j < points; ++j) {
            std::vector<double> vals;
            vals.reserve(res.size());
            for (const auto& r : res)
                vals.push_back(r.mse[j]);
            double mean = 0.0, ci = 0.0;
            detail::aggregate_point(std::move(vals), mean, ci);
            mse.y.push_back(mean);
            mse.ci_halfwidth.push_back(ci);
            mse.low_confidence.push_back(0);
        }
        out.push_back(std::move(mse));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Series files
// ---------------------------------------------------------------------------

inline std::string series_filename(const MetricSeries& s, const std::string& ext) {
    std::string kind = kind_name(s.kind);
    std::transform(kind.begin(), kind.end(), kind.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return kind + "_" + s.algorithm + "_" + s.scenario_digest + "." + ext;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const MetricSeries& s) {
    std::vector<bool> lc;
    lc.reserve(s.low_confidence.size());
    for (auto v : s.low_confidence)
        lc.push_back(v != 0);
    j = nlohmann::json{{"kind", kind_name(s.kind)},
                       {"algorithm", s.algorithm},
                       {"scenario_digest", s.scenario_digest},
                       {"x", s.x},
                       {"y", s.y},
                       {"ci_halfwidth", s.ci_halfwidth},
                       {"low_confidence", lc}};
}

inline void from_json(const nlohmann::json& j, MetricSeries& s) {
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    s.algorithm = j.at("algorithm").get<std::string>();
    s.scenario_digest = j.at("scenario_digest").get<std::string>();
    s.x = j.at("x").get<std::vector<double>>();
    s.y = j.at("y").get<std::vector<double>>();
    s.ci_halfwidth = j.at("ci_halfwidth").get<std::vector<double>>();
    s.low_confidence.clear();
    for (const auto& e : j.at("low_confidence"))
        s.low_confidence.push_back(e.get<bool>() ? 1 : 0);
}

// Writes one series to <dir>/<kind>_<algorithm>_<digest>.<ext> and returns
// the path. CSV carries the fixed column set; JSON mirrors the full series.
inline std::string emit_series(const MetricSeries& s, const std::string& dir,
                               const std::string& format) {
    if (format != "csv" && format != "json")
        throw std::invalid_argument("emit_series: format must be csv or json");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::filesystem::path path =
        std::filesystem::path(dir) / series_filename(s, format);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open \"" + path.string() + "\" for writing");
    if (format == "csv") {
        f << "x,y,ci,algorithm,scenario_digest\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            f << detail::fmt_double(s.x[i]) << ',' << detail::fmt_double(s.y[i]) << ','
              << detail::fmt_double(s.ci_halfwidth[i]) << ',' << s.algorithm << ','
              << s.scenario_digest << '\n';
    } else {
        const nlohmann::json j = s;
        f << j.dump(2) << '\n';
    }
    f.flush();
    if (!f)
        throw IoError("write failed for \"" + path.string() + "\"");
    return path.string();
}

inline MetricSeries load_series_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot read \"" + path + "\"");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("series JSON is malformed: " + std::string(e.what()));
    }
    try {
        return j.get<MetricSeries>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("series JSON is incomplete: " + std::string(e.what()));
    }
}

}  // namespace stlab::xp
