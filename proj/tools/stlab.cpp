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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stlab/analysis.hpp"
#include "stlab/harness.hpp"
#include "stlab/scenario.hpp"

namespace {

using namespace stlab;

std::vector<xp::ReceiverAlgo> parse_algos(const std::string& list) {
    std::vector<xp::ReceiverAlgo> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty())
            return;
        if (cur == "ccm")
            out.push_back(xp::ReceiverAlgo::CCM);
        else if (cur == "cmv")
            out.push_back(xp::ReceiverAlgo::CMV);
        else if (cur == "trained")
            out.push_back(xp::ReceiverAlgo::TRAINED);
        else if (cur == "mmse")
            out.push_back(xp::ReceiverAlgo::MMSE);
        else
            throw xp::ValidationError("unknown algorithm \"" + cur +
                                      "\"; expected ccm, cmv, trained, or mmse");
        cur.clear();
    };
    for (char c : list) {
        if (c == ',')
            flush();
        else
            cur += c;
    }
    flush();
    if (out.empty())
        throw xp::ValidationError("--algos needs at least one algorithm");
    return out;
}

int cmd_run(const std::string& scenario, std::size_t trials_override,
            std::uint64_t seed_override, bool seed_given, const std::string& out_dir,
            const std::string& format, const std::string& algos) {
    xp::ScenarioConfig cfg = xp::load_scenario(scenario);
    if (trials_override > 0)
        cfg.trials = trials_override;
    if (seed_given)
        cfg.base_seed = seed_override;
    for (const auto& w : cfg.warnings)
        std::cerr << "warning: " << w << "\n";

    std::vector<xp::ReceiverAlgo> algo_list =
        algos.empty() ? std::vector<xp::ReceiverAlgo>{cfg.receiver_mode} : parse_algos(algos);

    for (xp::ReceiverAlgo a : algo_list) {
        xp::ScenarioConfig run_cfg = cfg;
        run_cfg.receiver_mode = a;
        const std::vector<xp::MetricSeries> series = xp::run_monte_carlo(run_cfg);
        for (const auto& s : series)
            std::cout << xp::emit_series(s, out_dir, format) << "\n";
    }
    return 0;
}

int cmd_analyze(const std::string& check, const std::string& scenario) {
    const xp::ScenarioConfig cfg = xp::load_scenario(scenario);
    for (const auto& w : cfg.warnings)
        std::cerr << "warning: " << w << "\n";
    const std::uint64_t seed = cfg.base_seed;

    if (check == "capacity") {
        const nlohmann::json j = an::capacity_bound(cfg.n, cfg.n_tx, cfg.lp);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    const air::ChannelModel model(cfg.n_tx, cfg.n_rx, cfg.lp, cfg.power_profile_db, 0.0,
                                  air::mix_seed(seed, 0xc4a7));
    const air::ChannelRealization chan = model.realize(0.0);
    la::ComplexVector g = chan.g(0);
    const double gn = la::norm2(g);
    if (gn > 0.0)
        g = la::scaled(g, 1.0 / gn);

    if (check == "convexity") {
        const nlohmann::json j = an::convexity_margin(cfg.nu, 1.0, g, g);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    // Weighted-covariance equivalence: sample the output-weighted covariance
    // of the scenario's steady filter over one frozen-channel packet and
    // compare it against the scaled plain covariance.
    const double sigma2 = xp::sigma2_of_snr(cfg.snr_db.front());
    const std::size_t users = xp::total_users(cfg);
    const air::SpreadingSet codes =
        air::gen_spreading_set(users, cfg.n, cfg.n_tx, air::mix_seed(seed, 0xc0d5));
    const std::vector<double> amps = xp::detail::draw_amplitudes(cfg, seed);
    const air::ConstraintMatrices cm = air::build_constraint_matrices(codes, 0, cfg.lp);

    const double s2r = sigma2 > 0.0 ? sigma2 : 1e-9;
    const la::ComplexMatrix rex = air::exact_covariance(codes, chan, 0, amps, cfg.k, s2r, true);
    const rx::MmseFilters f =
        rx::mmse_oracle(rex, cm.stacked, cm.stacked_bar, chan.g(0), 1.0, sigma2);

    const la::ComplexMatrix packet =
        air::draw_qpsk_packet(users, cfg.p_symbols, air::mix_seed(seed, 0xda7a));
    air::SynthesisParams par;
    par.n_rx = 1;
    par.lp = cfg.lp;
    par.sigma2 = sigma2;
    par.amplitudes = amps;
    par.active_users = cfg.k;
    par.noise_seed = air::mix_seed(seed, 0x7015);
    air::StreamSynthesizer synth(codes, model, packet, par);

    const std::size_t dim = synth.stack_len();
    la::ComplexMatrix rk(dim, dim);
    const std::size_t blocks = synth.n_blocks();
    for (std::size_t b = 0; b < blocks; ++b) {
        const air::RxBlock blk = synth.next_block();
        const la::ComplexVector& y = blk.y[0];
        const la::cplx z = la::hdot(f.w, y);
        la::add_outer(rk, std::norm(z) / static_cast<double>(blocks), y, y);
    }
    const la::ComplexVector p1 = la::matvec(cm.stacked, chan.g(0));
    const nlohmann::json j = an::rk_equivalence(rk, rex, f.w, p1, 1.0, sigma2);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_presets() {
    for (const auto& p : xp::preset_list())
        std::cout << p.name << "  " << p.summary << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive space-time receiver laboratory"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario and write metric series files");
    std::string scenario;
    run->add_option("--scenario", scenario, "scenario JSON path or preset name")->required();
    std::size_t trials = 0;
    run->add_option("--trials", trials, "override the scenario's trial count");
    std::uint64_t seed = 0;
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario's base seed");
    std::string out_dir = ".";
    run->add_option("--out", out_dir, "output directory (default: current)");
    std::string format = "csv";
    run->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    std::string algos;
    run->add_option("--algos", algos, "comma-separated algorithms: ccm,cmv,trained,mmse");

    auto* analyze = app.add_subcommand("analyze", "one-shot analytic checks on a scenario");
    std::string check;
    analyze->add_option("--check", check, "which check to run")
        ->required()
        ->check(CLI::IsMember({"convexity", "capacity", "equivalence"}));
    std::string an_scenario;
    analyze->add_option("--scenario", an_scenario, "scenario JSON path or preset name")
        ->required();

    auto* presets = app.add_subcommand("presets", "list built-in scenario presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e);
        return r == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario, trials, seed, seed_opt->count() > 0, out_dir, format,
                           algos);
        if (analyze->parsed())
            return cmd_analyze(check, an_scenario);
        if (presets->parsed())
            return cmd_presets();
    } catch (const xp::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const xp::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
