#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cesim/errors.hpp"
#include "cesim/model.hpp"

namespace cesim {

using json = nlohmann::json;

enum class PowerRegime { FixedSumPower, FixedEirp };
enum class AlphaSearch { Grid, Bisection };

struct CeOptions {
  int m_subiters = 20;
  int n_passes = 3;
  // 0 selects the default 0.1 / (P_t * K) at the point of use.
  double step_size = 0.0;
  AlphaSearch alpha_search = AlphaSearch::Grid;
  double alpha_resolution_db = 0.1;
  double alpha_span_db = 6.0;
  int max_alpha_iters = 64;
};

inline double ce_effective_step(const CeOptions& opts, double p_t, int k_users) {
  return opts.step_size > 0.0 ? opts.step_size : 0.1 / (p_t * k_users);
}

struct PaFitSpec {
  double smoothness = 2.0;
  double sat_out = 1.0;
  double perturbation_rel = 0.02;
  int fit_grid = 400;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  int k_users = 4;
  int n_antennas = 24;
  Alphabet alphabet = Alphabet::QAM16;
  int n_symbols_per_trial = 2000;
  int n_trials = 50;
  int oversampling = 8;
  int rrc_order = 33;
  double rrc_rolloff = 0.4;
  double mui_target_db = 20.0;
  PowerRegime power_regime = PowerRegime::FixedSumPower;
  std::vector<double> tx_power_sweep_db = {0, 1, 2,  3,  4,  5,  6,  7,
                                           8, 9, 10, 11, 12, 13, 14, 15};
  double noise_ref_snr_db = 12.0;
  std::uint64_t master_seed = 1;
  // Back-off of the geometric-mean 1 dB compression point at 0 dB relative
  // power; each +1 dB of sweep power drives the PAs 1 dB harder.
  double backoff_anchor_db = 16.5;
  int papr_window_symbols = 100;
  double sinr_ceiling_db = 60.0;
  PaFitSpec pa_config{};
  CeOptions ce_opts{};
};

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
  fail("config", "invalid configuration field '" + field + "': " + why, {{"field", field}});
}

inline void expect_keys(const json& j, const char* scope,
                        std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed)
      if (key == a) { known = true; break; }
    if (!known)
      fail("config", std::string("unknown configuration field '") + scope + key + "'",
           {{"field", std::string(scope) + key}});
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong JSON type");
  }
}

}  // namespace detail

inline const char* to_string(PowerRegime r) {
  return r == PowerRegime::FixedSumPower ? "FixedSumPower" : "FixedEirp";
}
inline const char* to_string(AlphaSearch s) {
  return s == AlphaSearch::Grid ? "grid" : "bisection";
}
inline const char* to_string(Alphabet) { return "QAM16"; }

inline void validate(const CeOptions& o) {
  if (o.m_subiters < 1) detail::bad_field("ce_opts.m_subiters", "must be >= 1");
  if (o.n_passes < 1) detail::bad_field("ce_opts.n_passes", "must be >= 1");
  if (o.step_size < 0.0 || !std::isfinite(o.step_size))
    detail::bad_field("ce_opts.step_size", "must be > 0, or 0 for the default");
  if (!(o.alpha_resolution_db > 0.0))
    detail::bad_field("ce_opts.alpha_resolution_db", "must be > 0");
  if (o.alpha_span_db < o.alpha_resolution_db)
    detail::bad_field("ce_opts.alpha_span_db", "must be >= alpha_resolution_db");
  if (o.max_alpha_iters < 1) detail::bad_field("ce_opts.max_alpha_iters", "must be >= 1");
}

inline void validate(const PaFitSpec& s) {
  if (!(s.smoothness > 0.0)) detail::bad_field("pa_config.smoothness", "must be > 0");
  if (!(s.sat_out > 0.0)) detail::bad_field("pa_config.sat_out", "must be > 0");
  if (s.perturbation_rel < 0.0 || s.perturbation_rel > 0.1)
    detail::bad_field("pa_config.perturbation_rel", "must lie in [0, 0.1]");
  if (s.fit_grid < 16) detail::bad_field("pa_config.fit_grid", "must be >= 16");
}

inline void validate(const ExperimentConfig& c) {
  if (c.k_users <= 0) detail::bad_field("k_users", "must be > 0");
  if (c.n_antennas <= 0) detail::bad_field("n_antennas", "must be > 0");
  if (c.n_antennas < c.k_users)
    detail::bad_field("n_antennas", "must be >= k_users for a right pseudoinverse");
  if (c.n_symbols_per_trial <= 0) detail::bad_field("n_symbols_per_trial", "must be > 0");
  if (c.n_trials <= 0) detail::bad_field("n_trials", "must be > 0");
  if (c.oversampling < 1) detail::bad_field("oversampling", "must be >= 1");
  if (c.rrc_order < 0) detail::bad_field("rrc_order", "must be >= 0");
  if (!(c.rrc_rolloff > 0.0) || c.rrc_rolloff > 1.0)
    detail::bad_field("rrc_rolloff", "must lie in (0, 1]");
  if (!std::isfinite(c.mui_target_db)) detail::bad_field("mui_target_db", "must be finite");
  if (c.tx_power_sweep_db.empty()) detail::bad_field("tx_power_sweep_db", "must be non-empty");
  for (std::size_t i = 0; i + 1 < c.tx_power_sweep_db.size(); ++i)
    if (!(c.tx_power_sweep_db[i] < c.tx_power_sweep_db[i + 1]))
      detail::bad_field("tx_power_sweep_db", "must be strictly increasing");
  for (double v : c.tx_power_sweep_db)
    if (!std::isfinite(v)) detail::bad_field("tx_power_sweep_db", "entries must be finite");
  if (!std::isfinite(c.noise_ref_snr_db)) detail::bad_field("noise_ref_snr_db", "must be finite");
  if (!std::isfinite(c.backoff_anchor_db)) detail::bad_field("backoff_anchor_db", "must be finite");
  if (c.papr_window_symbols < 1) detail::bad_field("papr_window_symbols", "must be >= 1");
  if (!(c.sinr_ceiling_db > 0.0)) detail::bad_field("sinr_ceiling_db", "must be > 0");
  validate(c.pa_config);
  validate(c.ce_opts);
  // Transient trimming removes rrc_order symbols at each frame edge, and at
  // least one full PAPR window must remain.
  if (c.n_symbols_per_trial < 2 * c.rrc_order + c.papr_window_symbols)
    detail::bad_field("n_symbols_per_trial",
                      "must be >= 2 * rrc_order + papr_window_symbols");
}

inline CeOptions ce_options_from_json(const json& j) {
  detail::expect_keys(j, "ce_opts.",
                      {"m_subiters", "n_passes", "step_size", "alpha_search",
                       "alpha_resolution_db", "alpha_span_db", "max_alpha_iters"});
  CeOptions o;
  o.m_subiters = detail::get_or(j, "m_subiters", o.m_subiters);
  o.n_passes = detail::get_or(j, "n_passes", o.n_passes);
  o.step_size = detail::get_or(j, "step_size", o.step_size);
  if (j.contains("alpha_search")) {
    const auto s = j.at("alpha_search").get<std::string>();
    if (s == "grid")
      o.alpha_search = AlphaSearch::Grid;
    else if (s == "bisection")
      o.alpha_search = AlphaSearch::Bisection;
    else
      detail::bad_field("ce_opts.alpha_search", "must be 'grid' or 'bisection'");
  }
  o.alpha_resolution_db = detail::get_or(j, "alpha_resolution_db", o.alpha_resolution_db);
  o.alpha_span_db = detail::get_or(j, "alpha_span_db", o.alpha_span_db);
  o.max_alpha_iters = detail::get_or(j, "max_alpha_iters", o.max_alpha_iters);
  validate(o);
  return o;
}

inline PaFitSpec pa_spec_from_json(const json& j) {
  detail::expect_keys(j, "pa_config.",
                      {"smoothness", "sat_out", "perturbation_rel", "fit_grid", "seed"});
  PaFitSpec s;
  s.smoothness = detail::get_or(j, "smoothness", s.smoothness);
  s.sat_out = detail::get_or(j, "sat_out", s.sat_out);
  s.perturbation_rel = detail::get_or(j, "perturbation_rel", s.perturbation_rel);
  s.fit_grid = detail::get_or(j, "fit_grid", s.fit_grid);
  s.seed = detail::get_or(j, "seed", s.seed);
  validate(s);
  return s;
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::expect_keys(
      j, "",
      {"k_users", "n_antennas", "alphabet", "n_symbols_per_trial", "n_trials", "oversampling",
       "rrc_order", "rrc_rolloff", "mui_target_db", "power_regime", "tx_power_sweep_db",
       "noise_ref_snr_db", "master_seed", "backoff_anchor_db", "papr_window_symbols",
       "sinr_ceiling_db", "pa_config", "ce_opts"});
  ExperimentConfig c;
  c.k_users = detail::get_or(j, "k_users", c.k_users);
  c.n_antennas = detail::get_or(j, "n_antennas", c.n_antennas);
  if (j.contains("alphabet")) {
    if (j.at("alphabet").get<std::string>() != "QAM16")
      detail::bad_field("alphabet", "only 'QAM16' is supported");
    c.alphabet = Alphabet::QAM16;
  }
  c.n_symbols_per_trial = detail::get_or(j, "n_symbols_per_trial", c.n_symbols_per_trial);
  c.n_trials = detail::get_or(j, "n_trials", c.n_trials);
  c.oversampling = detail::get_or(j, "oversampling", c.oversampling);
  c.rrc_order = detail::get_or(j, "rrc_order", c.rrc_order);
  c.rrc_rolloff = detail::get_or(j, "rrc_rolloff", c.rrc_rolloff);
  c.mui_target_db = detail::get_or(j, "mui_target_db", c.mui_target_db);
  if (j.contains("power_regime")) {
    const auto s = j.at("power_regime").get<std::string>();
    if (s == "FixedSumPower")
      c.power_regime = PowerRegime::FixedSumPower;
    else if (s == "FixedEirp")
      c.power_regime = PowerRegime::FixedEirp;
    else
      detail::bad_field("power_regime", "must be 'FixedSumPower' or 'FixedEirp'");
  }
  c.tx_power_sweep_db =
      detail::get_or(j, "tx_power_sweep_db", c.tx_power_sweep_db);
  c.noise_ref_snr_db = detail::get_or(j, "noise_ref_snr_db", c.noise_ref_snr_db);
  c.master_seed = detail::get_or(j, "master_seed", c.master_seed);
  c.backoff_anchor_db = detail::get_or(j, "backoff_anchor_db", c.backoff_anchor_db);
  c.papr_window_symbols = detail::get_or(j, "papr_window_symbols", c.papr_window_symbols);
  c.sinr_ceiling_db = detail::get_or(j, "sinr_ceiling_db", c.sinr_ceiling_db);
  if (j.contains("pa_config")) c.pa_config = pa_spec_from_json(j.at("pa_config"));
  if (j.contains("ce_opts")) c.ce_opts = ce_options_from_json(j.at("ce_opts"));
  validate(c);
  return c;
}

inline json to_json(const CeOptions& o) {
  return json{{"m_subiters", o.m_subiters},
              {"n_passes", o.n_passes},
              {"step_size", o.step_size},
              {"alpha_search", to_string(o.alpha_search)},
              {"alpha_resolution_db", o.alpha_resolution_db},
              {"alpha_span_db", o.alpha_span_db},
              {"max_alpha_iters", o.max_alpha_iters}};
}

inline json to_json(const PaFitSpec& s) {
  return json{{"smoothness", s.smoothness},
              {"sat_out", s.sat_out},
              {"perturbation_rel", s.perturbation_rel},
              {"fit_grid", s.fit_grid},
              {"seed", s.seed}};
}

inline json to_json(const ExperimentConfig& c) {
  return json{{"k_users", c.k_users},
              {"n_antennas", c.n_antennas},
              {"alphabet", to_string(c.alphabet)},
              {"n_symbols_per_trial", c.n_symbols_per_trial},
              {"n_trials", c.n_trials},
              {"oversampling", c.oversampling},
              {"rrc_order", c.rrc_order},
              {"rrc_rolloff", c.rrc_rolloff},
              {"mui_target_db", c.mui_target_db},
              {"power_regime", to_string(c.power_regime)},
              {"tx_power_sweep_db", c.tx_power_sweep_db},
              {"noise_ref_snr_db", c.noise_ref_snr_db},
              {"master_seed", c.master_seed},
              {"backoff_anchor_db", c.backoff_anchor_db},
              {"papr_window_symbols", c.papr_window_symbols},
              {"sinr_ceiling_db", c.sinr_ceiling_db},
              {"pa_config", to_json(c.pa_config)},
              {"ce_opts", to_json(c.ce_opts)}};
}

}  // namespace cesim
