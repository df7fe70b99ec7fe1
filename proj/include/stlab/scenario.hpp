// SPDX-License-Identifier: Apache-2.0
//
// Experiment scenario configuration: JSON loading with full-issue validation,
// named presets for the standard experiments, and a canonical digest that
// identifies a configuration in output filenames and metadata.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlab/analysis.hpp"

namespace stlab::xp {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Message lists every issue found, one per line, not just the first.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReceiverAlgo { CCM, CMV, TRAINED, MMSE };
enum class CombinerKind { EGC, MRC };

inline std::string algo_name(ReceiverAlgo a) {
    switch (a) {
        case ReceiverAlgo::CCM: return "ccm";
        case ReceiverAlgo::CMV: return "cmv";
        case ReceiverAlgo::TRAINED: return "trained";
        case ReceiverAlgo::MMSE: return "mmse";
    }
    return "ccm";
}

// Mid-packet change of the user population: at symbol_index, users_added new
// interferers become active, their powers drawn with new_spread_db.
struct DynamicEvent {
    std::size_t symbol_index = 0;
    std::size_t users_added = 0;
    double new_spread_db = 0.0;
};

struct ScenarioConfig {
    std::size_t k = 4;        // active users at packet start
    std::size_t n = 16;       // spreading gain (chips per symbol)
    std::size_t n_tx = 2;
    std::size_t n_rx = 1;
    std::size_t lp = 3;       // channel tap span
    std::size_t p_symbols = 1000;  // packet length, even
    std::vector<double> snr_db = {15.0};
    double fd_ts = 0.0;       // normalized Doppler; 0 freezes the channel
    std::vector<double> power_profile_db = {0.0, -3.0, -6.0};
    double interferer_spread_db = 3.0;
    double nu = 1.0;
    double alpha = 0.998;
    std::size_t power_exp = 2;  // subspace inverse-power exponent
    double delta = 0.01;
    ReceiverAlgo receiver_mode = ReceiverAlgo::CCM;
    CombinerKind combiner = CombinerKind::EGC;
    std::vector<DynamicEvent> dynamic_events;
    std::vector<std::size_t> k_sweep;  // user-count sweep axis, empty = off
    std::size_t trials = 50;
    std::uint64_t base_seed = 12345;

    std::vector<std::string> warnings;  // filled during validation, not config
};

// SNR values at or above this run with the noise generator off entirely,
// standing in for an infinite ratio that has no finite dB encoding.
inline constexpr double kNoiselessSnrDb = 990.0;

inline double sigma2_of_snr(double snr_db) {
    if (snr_db >= kNoiselessSnrDb)
        return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

inline std::size_t total_users(const ScenarioConfig& cfg) {
    std::size_t t = cfg.k;
    for (const auto& ev : cfg.dynamic_events)
        t += ev.users_added;
    return t;
}

inline void to_json(nlohmann::json& j, const DynamicEvent& ev) {
    j = nlohmann::json{{"symbol_index", ev.symbol_index},
                       {"users_added", ev.users_added},
                       {"new_spread_db", ev.new_spread_db}};
}

inline void to_json(nlohmann::json& j, const ScenarioConfig& cfg) {
    j = nlohmann::json{
        {"K", cfg.k},
        {"N", cfg.n},
        {"Nt", cfg.n_tx},
        {"Nr", cfg.n_rx},
        {"Lp", cfg.lp},
        {"P", cfg.p_symbols},
        {"snr_db", cfg.snr_db},
        {"fdT", cfg.fd_ts},
        {"power_profile_db", cfg.power_profile_db},
        {"interferer_spread_db", cfg.interferer_spread_db},
        {"nu", cfg.nu},
        {"alpha", cfg.alpha},
        {"p", cfg.power_exp},
        {"delta", cfg.delta},
        {"receiver_mode", cfg.receiver_mode == ReceiverAlgo::CCM       ? "CCM"
                          : cfg.receiver_mode == ReceiverAlgo::CMV     ? "CMV"
                          : cfg.receiver_mode == ReceiverAlgo::TRAINED ? "TRAINED"
                                                                       : "MMSE"},
        {"combiner", cfg.combiner == CombinerKind::EGC ? "EGC" : "MRC"},
        {"dynamic_events", cfg.dynamic_events},
        {"k_sweep", cfg.k_sweep},
        {"trials", cfg.trials},
        {"base_seed", cfg.base_seed},
    };
}

// 64-bit FNV-1a over the canonical (key-sorted) JSON encoding, as 16 hex
// digits. The receiver algorithm is left out so curves produced by different
// algorithms on one scenario share a digest; series metadata carries the
// algorithm separately. Everything else must match for digests to collide.
inline std::string scenario_digest(const ScenarioConfig& cfg) {
    nlohmann::json j = cfg;
    j.erase("receiver_mode");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace detail {

inline bool is_uint(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline bool is_num(const nlohmann::json& v) { return v.is_number(); }

}  // namespace detail

// Builds a config from parsed JSON. Unknown keys are rejected; every problem
// found is reported, joined into one ValidationError message.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    std::vector<std::string> issues;

    if (!j.is_object()) {
        throw ValidationError("scenario: top-level JSON value must be an object");
    }

    static const std::vector<std::string> known = {
        "K", "N", "Nt", "Nr", "Lp", "P", "snr_db", "fdT", "power_profile_db",
        "interferer_spread_db", "nu", "alpha", "p", "delta", "receiver_mode",
        "combiner", "dynamic_events", "k_sweep", "trials", "base_seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known)
            ok = ok || k == it.key();
        if (!ok)
            issues.push_back("unknown key \"" + it.key() + "\"");
    }

    auto take_uint = [&](const char* key, std::size_t& dst) {
        if (!j.contains(key))
            return;
        if (!detail::is_uint(j.at(key))) {
            issues.push_back(std::string(key) + " must be a non-negative integer");
            return;
        }
        dst = j.at(key).get<std::size_t>();
    };
    auto take_double = [&](const char* key, double& dst) {
        if (!j.contains(key))
            return;
        if (!detail::is_num(j.at(key))) {
            issues.push_back(std::string(key) + " must be a number");
            return;
        }
        dst = j.at(key).get<double>();
    };

    take_uint("K", cfg.k);
    take_uint("N", cfg.n);
    take_uint("Nt", cfg.n_tx);
    take_uint("Nr", cfg.n_rx);
    take_uint("Lp", cfg.lp);
    take_uint("P", cfg.p_symbols);
    take_double("fdT", cfg.fd_ts);
    take_double("interferer_spread_db", cfg.interferer_spread_db);
    take_double("nu", cfg.nu);
    take_double("alpha", cfg.alpha);
    take_uint("p", cfg.power_exp);
    take_double("delta", cfg.delta);
    take_uint("trials", cfg.trials);
    if (j.contains("base_seed")) {
        if (!detail::is_uint(j.at("base_seed")))
            issues.push_back("base_seed must be a non-negative integer");
        else
            cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    }

    if (j.contains("snr_db")) {
        const auto& v = j.at("snr_db");
        if (detail::is_num(v)) {
            cfg.snr_db = {v.get<double>()};
        } else if (v.is_array() && !v.empty()) {
            cfg.snr_db.clear();
            for (const auto& e : v) {
                if (!detail::is_num(e)) {
                    issues.push_back("snr_db entries must be numbers");
                    cfg.snr_db = {15.0};
                    break;
                }
                cfg.snr_db.push_back(e.get<double>());
            }
        } else {
            issues.push_back("snr_db must be a number or a non-empty array of numbers");
        }
    }

    if (j.contains("power_profile_db")) {
        const auto& v = j.at("power_profile_db");
        if (!v.is_array() || v.empty()) {
            issues.push_back("power_profile_db must be a non-empty array of numbers");
        } else {
            cfg.power_profile_db.clear();
            for (const auto& e : v) {
                if (!detail::is_num(e)) {
                    issues.push_back("power_profile_db entries must be numbers");
                    cfg.power_profile_db = {0.0};
                    break;
                }
                cfg.power_profile_db.push_back(e.get<double>());
            }
        }
    }

    if (j.contains("receiver_mode")) {
        const auto& v = j.at("receiver_mode");
        const std::string s = v.is_string() ? v.get<std::string>() : "";
        if (s == "CCM")
            cfg.receiver_mode = ReceiverAlgo::CCM;
        else if (s == "CMV")
            cfg.receiver_mode = ReceiverAlgo::CMV;
        else if (s == "TRAINED")
            cfg.receiver_mode = ReceiverAlgo::TRAINED;
        else if (s == "MMSE")
            cfg.receiver_mode = ReceiverAlgo::MMSE;
        else
            issues.push_back("receiver_mode must be one of CCM, CMV, TRAINED, MMSE");
    }

    if (j.contains("combiner")) {
        const auto& v = j.at("combiner");
        const std::string s = v.is_string() ? v.get<std::string>() : "";
        if (s == "EGC")
            cfg.combiner = CombinerKind::EGC;
        else if (s == "MRC")
            cfg.combiner = CombinerKind::MRC;
        else
            issues.push_back("combiner must be EGC or MRC");
    }

    if (j.contains("dynamic_events")) {
        const auto& v = j.at("dynamic_events");
        if (!v.is_array()) {
            issues.push_back("dynamic_events must be an array");
        } else {
            for (const auto& e : v) {
                if (!e.is_object() || !e.contains("symbol_index")) {
                    issues.push_back(
                        "dynamic_events entries must be objects with a symbol_index");
                    continue;
                }
                DynamicEvent ev;
                if (!detail::is_uint(e.at("symbol_index"))) {
                    issues.push_back("dynamic_events symbol_index must be a non-negative integer");
                    continue;
                }
                ev.symbol_index = e.at("symbol_index").get<std::size_t>();
                if (e.contains("users_added")) {
                    if (!detail::is_uint(e.at("users_added"))) {
                        issues.push_back("dynamic_events users_added must be a non-negative integer");
                        continue;
                    }
                    ev.users_added = e.at("users_added").get<std::size_t>();
                }
                if (e.contains("new_spread_db")) {
                    if (!detail::is_num(e.at("new_spread_db"))) {
                        issues.push_back("dynamic_events new_spread_db must be a number");
                        continue;
                    }
                    ev.new_spread_db = e.at("new_spread_db").get<double>();
                }
                for (auto it = e.begin(); it != e.end(); ++it)
                    if (it.key() != "symbol_index" && it.key() != "users_added" &&
                        it.key() != "new_spread_db")
                        issues.push_back("dynamic_events entry has unknown key \"" + it.key() +
                                         "\"");
                cfg.dynamic_events.push_back(ev);
            }
        }
    }

    if (j.contains("k_sweep")) {
        const auto& v = j.at("k_sweep");
        if (!v.is_array()) {
            issues.push_back("k_sweep must be an array of positive integers");
        } else {
            for (const auto& e : v) {
                if (!detail::is_uint(e) || e.get<std::size_t>() == 0) {
                    issues.push_back("k_sweep entries must be positive integers");
                    break;
                }
                cfg.k_sweep.push_back(e.get<std::size_t>());
            }
        }
    }

    // Range checks run on whatever parsed, so one bad field does not hide
    // range problems in the others.
    if (cfg.k == 0)
        issues.push_back("K must be at least 1");
    if (cfg.n < 2)
        issues.push_back("N must be at least 2");
    if (cfg.n_tx != 1 && cfg.n_tx != 2)
        issues.push_back("Nt must be 1 or 2");
    if (cfg.n_rx != 1 && cfg.n_rx != 2)
        issues.push_back("Nr must be 1 or 2");
    if (cfg.lp == 0)
        issues.push_back("Lp must be at least 1");
    if (cfg.p_symbols == 0 || cfg.p_symbols % 2 != 0) {
        std::ostringstream os;
        os << "P must be a positive even symbol count; got " << cfg.p_symbols;
        issues.push_back(os.str());
    }
    for (double s : cfg.snr_db)
        if (!std::isfinite(s))
            issues.push_back("snr_db values must be finite");
    if (cfg.fd_ts < 0.0)
        issues.push_back("fdT must be non-negative");
    if (cfg.interferer_spread_db < 0.0)
        issues.push_back("interferer_spread_db must be non-negative");
    if (cfg.nu <= 0.0)
        issues.push_back("nu must be positive");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
        issues.push_back("alpha must lie in (0, 1]");
    if (cfg.power_exp == 0)
        issues.push_back("p must be at least 1");
    if (cfg.delta <= 0.0)
        issues.push_back("delta must be positive");
    if (cfg.trials == 0)
        issues.push_back("trials must be at least 1");
    if (cfg.snr_db.size() > 1 && !cfg.k_sweep.empty())
        issues.push_back("snr_db sweep and k_sweep cannot be combined in one scenario");

    std::size_t prev_sym = 0;
    bool first_ev = true;
    for (const auto& ev : cfg.dynamic_events) {
        if (ev.symbol_index == 0 || ev.symbol_index >= cfg.p_symbols)
            issues.push_back("dynamic_events symbol_index must fall inside the packet");
        if (!first_ev && ev.symbol_index <= prev_sym)
            issues.push_back("dynamic_events must be sorted by strictly increasing symbol_index");
        if (ev.new_spread_db < 0.0)
            issues.push_back("dynamic_events new_spread_db must be non-negative");
        prev_sym = ev.symbol_index;
        first_ev = false;
    }

    if (issues.empty()) {
        // Code distinctness is drawn from sign patterns; beyond this there are
        // not enough distinct codes for the population.
        std::size_t users = total_users(cfg);
        for (std::size_t kk : cfg.k_sweep)
            users = std::max(users, kk);
        const double capacity = std::pow(2.0, static_cast<double>(cfg.n - 1));
        if (static_cast<double>(users * cfg.n_tx) > capacity)
            issues.push_back("user population exceeds the distinct-code capacity of N");

        const an::CapacityReport cap = an::capacity_bound(cfg.n, cfg.n_tx, cfg.lp);
        if (users > cap.k_max) {
            std::ostringstream os;
            os << "user population " << users << " exceeds the supportable bound " << cap.k_max
               << " for N=" << cfg.n << ", Lp=" << cfg.lp << "; running anyway";
            cfg.warnings.push_back(os.str());
        }
    }

    if (!issues.empty()) {
        std::string msg = "scenario validation failed:";
        for (const auto& s : issues)
            msg += "\n  - " + s;
        throw ValidationError(msg);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct PresetInfo {
    std::string name;
    std::string summary;
};

inline std::vector<PresetInfo> preset_list() {
    return {
        {"fig2", "dynamic load: 10 users, +6 at symbol 1500 with 3 to 6 dB spread, "
                 "N=32, Lp=6, SNR 15, tracks BER vs symbol"},
        {"fig3", "same dynamic load scenario, intended for channel-MSE vs symbol"},
        {"fig4a", "static load: 10 users, N=32, Lp=6, P=1500, BER vs SNR sweep"},
        {"fig4b", "static SNR 15: N=32, Lp=6, P=1500, BER vs user count sweep"},
    };
}

inline ScenarioConfig make_preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.n = 32;
    cfg.lp = 6;
    cfg.k = 10;
    cfg.n_tx = 2;
    cfg.n_rx = 1;
    cfg.power_profile_db = {0.0, -3.0, -6.0};
    cfg.interferer_spread_db = 3.0;
    cfg.fd_ts = 0.0;
    cfg.combiner = CombinerKind::MRC;
    cfg.trials = 200;
    // Forgetting factor tuned so packet-scale memory clears the acquisition
    // era before the measurement region; 0.998 leaves deep-fade trials
    // anchored to stale statistics for the whole packet.
    cfg.alpha = 0.993;

    if (name == "fig2" || name == "fig3") {
        cfg.p_symbols = 3000;
        cfg.snr_db = {15.0};
        cfg.dynamic_events = {{1500, 6, 6.0}};
        return cfg;
    }
    if (name == "fig4a") {
        cfg.p_symbols = 1500;
        cfg.snr_db = {0.0, 3.0, 6.0, 9.0, 12.0, 15.0};
        return cfg;
    }
    if (name == "fig4b") {
        cfg.p_symbols = 1500;
        cfg.snr_db = {15.0};
        cfg.k_sweep = {2, 4, 6, 8, 10, 12, 14, 16};
        return cfg;
    }
    throw ValidationError("unknown preset \"" + name + "\"");
}

inline bool is_preset(const std::string& name) {
    for (const auto& p : preset_list())
        if (p.name == name)
            return true;
    return false;
}

// Loads a scenario from a preset name or a JSON file path. Presets run
// through the same validation as files so their warnings are populated.
inline ScenarioConfig load_scenario(const std::string& path_or_preset) {
    if (is_preset(path_or_preset)) {
        const nlohmann::json j = make_preset(path_or_preset);
        return scenario_from_json(j);
    }
    std::ifstream in(path_or_preset);
    if (!in)
        throw ParseError("cannot read scenario file \"" + path_or_preset + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scenario JSON is malformed: " + std::string(e.what()));
    }
    return scenario_from_json(j);
}

}  // namespace stlab::xp
