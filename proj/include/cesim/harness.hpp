#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cesim/config.hpp"
#include "cesim/csv.hpp"
#include "cesim/errors.hpp"
#include "cesim/link.hpp"
#include "cesim/model.hpp"
#include "cesim/pa.hpp"
#include "cesim/precoding.hpp"
#include "cesim/rng.hpp"
#include "cesim/waveform.hpp"

namespace cesim {

enum class Precoder { CE, ZF };
enum class PaMode { Ideal, Real };

inline const char* to_string(Precoder p) { return p == Precoder::CE ? "CE" : "ZF"; }
inline const char* to_string(PaMode m) { return m == PaMode::Ideal ? "Ideal" : "Real"; }

struct SweepRow {
  double tx_power_rel_db = 0.0;
  double ber = 0.0;
  double sinr_db = 0.0;
  double mean_backoff_db = 0.0;
  double mui_ratio_db = 0.0;
  double p_sum_rel_db = 0.0;  // sum power offset vs the sweep value (FixedEirp ZF only)
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t excluded_frames = 0;
};

struct SweepResult {
  PowerRegime regime = PowerRegime::FixedSumPower;
  Precoder precoder = Precoder::CE;
  PaMode pa_mode = PaMode::Ideal;
  std::vector<SweepRow> rows;
  CcdfCurve papr;
};

struct StudyOutput {
  ExperimentConfig config;
  std::vector<SweepResult> sweeps;
  CcdfCurve ccdf_ce;
  CcdfCurve ccdf_zf;
  std::vector<PaModel> bank;
  std::vector<std::uint64_t> infeasible_per_trial;
  std::uint64_t total_frames = 0;
  double mean_eirp_offset_db = 0.0;
  double geo_a1db = 0.0;
};

namespace detail {

inline constexpr int kNumLanes = 3;  // CE, ZF at sweep power, ZF at matched EIRP
inline constexpr int kLaneCe = 0;
inline constexpr int kLaneZfSum = 1;
inline constexpr int kLaneZfEirp = 2;

struct LaneAccum {
  double sinr_num = 0.0;
  double sinr_den = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;
  double backoff_sum = 0.0;
  std::uint64_t backoff_terms = 0;
  std::uint64_t excluded_frames = 0;
};

struct TrialOutput {
  // Indexed lane * (2 * n_points) + mode * n_points + point.
  std::vector<LaneAccum> accums;
  double mui_num_ce = 0.0, mui_den_ce = 0.0;
  double mui_num_zf = 0.0, mui_den_zf = 0.0;
  std::vector<double> papr_ce, papr_zf;
  std::uint64_t infeasible = 0;
  double eirp_offset_db = 0.0;
};

inline void add_noise(AntennaWaveform& y, double noise_std, std::uint64_t seed, int user) {
  if (noise_std <= 0.0) return;
  Rng rng(derive_seed(seed, "awgn", static_cast<std::uint64_t>(user)));
  for (auto& v : y.samples) v += noise_std * rng.cnormal();
}

inline AntennaWaveform core_slice(const AntennaWaveform& wf, int order) {
  AntennaWaveform out;
  out.oversampling = wf.oversampling;
  out.symbol_count = wf.symbol_count - 2 * order;
  out.antenna_index = wf.antenna_index;
  const std::size_t begin = static_cast<std::size_t>(order) * wf.oversampling;
  const std::size_t len = static_cast<std::size_t>(out.symbol_count) * wf.oversampling;
  out.samples.assign(wf.samples.begin() + begin, wf.samples.begin() + begin + len);
  return out;
}

struct TrialContext {
  const ExperimentConfig* cfg;
  const RrcFilter* filter;
  const std::vector<PaModel>* bank;
  std::vector<double> a1db;
  double geo_a1db = 0.0;
  bool sweep_points = true;  // false for CCDF-only studies
};

inline TrialOutput run_trial(const TrialContext& ctx, int trial) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const RrcFilter& filter = *ctx.filter;
  const int n_ant = cfg.n_antennas;
  const int k_users = cfg.k_users;
  const int n_sym = cfg.n_symbols_per_trial;
  const int order = cfg.rrc_order;
  const int n_points = static_cast<int>(cfg.tx_power_sweep_db.size());
  const double p_t = 1.0;
  const std::uint64_t noise_seed = derive_seed(cfg.master_seed, "noise", trial);

  TrialOutput out;
  out.accums.assign(static_cast<std::size_t>(kNumLanes) * 2 * n_points, LaneAccum{});

  const MuChannel ch = draw_channel(k_users, n_ant, derive_seed(cfg.master_seed, "chan", trial));
  const ZfPrecoder zf = zf_weights(ch, p_t);

  Rng sym_rng(derive_seed(cfg.master_seed, "sym", trial));
  std::vector<SymbolFrame> frames(n_sym);
  for (auto& f : frames) f = draw_symbols(k_users, sym_rng);

  // CE solutions per frame; infeasible frames still transmit the deepest
  // search point's phases but are excluded from every metric.
  std::vector<double> alphas(n_sym, 0.0);
  std::vector<char> feasible(n_sym, 0);
  std::vector<std::vector<double>> phases(n_sym);
  const double alpha_floor =
      std::pow(10.0, -cfg.ce_opts.alpha_span_db / 20.0);  // relative to beta
  for (int m = 0; m < n_sym; ++m) {
    try {
      CeSolution sol = ce_alpha_search(ch, frames[m], p_t, cfg.mui_target_db, cfg.ce_opts);
      alphas[m] = sol.alpha;
      feasible[m] = 1;
      phases[m] = std::move(sol.phases);
    } catch (const SimError& e) {
      if (e.kind() != "infeasible") throw;
      ++out.infeasible;
      CeSolution sol = ce_optimize(ch, frames[m], zf.beta * alpha_floor, p_t, cfg.ce_opts);
      phases[m] = std::move(sol.phases);
    }
  }

  // Pooled symbol-rate MUI ratios (pre pulse shaping).
  const double q = std::sqrt(p_t / n_ant);
  std::vector<std::vector<cplx>> x_ce(n_ant, std::vector<cplx>(n_sym));
  std::vector<std::vector<cplx>> x_zf(n_ant, std::vector<cplx>(n_sym));
  for (int m = 0; m < n_sym; ++m) {
    for (int n = 0; n < n_ant; ++n) x_ce[n][m] = std::polar(q, phases[m][n]);
    PrecodedFrame pf = apply_linear(zf, frames[m]);
    for (int n = 0; n < n_ant; ++n) x_zf[n][m] = pf.samples[n];
  }
  for (int m = 0; m < n_sym; ++m) {
    for (int k = 0; k < k_users; ++k) {
      cplx acc_ce(0.0, 0.0), acc_zf(0.0, 0.0);
      for (int n = 0; n < n_ant; ++n) {
        acc_ce += ch.at(k, n) * x_ce[n][m];
        acc_zf += ch.at(k, n) * x_zf[n][m];
      }
      const cplx s = frames[m].symbols[k];
      if (feasible[m]) {
        out.mui_num_ce += std::norm(alphas[m] * s);
        out.mui_den_ce += std::norm(acc_ce - alphas[m] * s);
      }
      out.mui_num_zf += std::norm(zf.beta * s);
      out.mui_den_zf += std::norm(acc_zf - zf.beta * s);
    }
  }

  double alpha_bar = 0.0;
  std::uint64_t n_feasible = 0;
  for (int m = 0; m < n_sym; ++m)
    if (feasible[m]) {
      alpha_bar += alphas[m];
      ++n_feasible;
    }
  const bool ce_usable = n_feasible > 0;
  alpha_bar = ce_usable ? alpha_bar / n_feasible : zf.beta;
  const double eirp_ratio = alpha_bar / zf.beta;
  out.eirp_offset_db = 20.0 * std::log10(eirp_ratio);

  // Shared shaped waveforms (unit reference amplitude, before any drive).
  std::vector<AntennaWaveform> wf_ce(n_ant), wf_zf(n_ant);
  std::vector<double> rms_ce(n_ant), rms_zf(n_ant);
  for (int n = 0; n < n_ant; ++n) {
    wf_ce[n] = shape(x_ce[n], filter, n);
    wf_zf[n] = shape(x_zf[n], filter, n);
    double pce = 0.0, pzf = 0.0;
    for (const auto& v : wf_ce[n].samples) pce += std::norm(v);
    for (const auto& v : wf_zf[n].samples) pzf += std::norm(v);
    rms_ce[n] = std::sqrt(pce / wf_ce[n].samples.size());
    rms_zf[n] = std::sqrt(pzf / wf_zf[n].samples.size());
  }

  for (int n = 0; n < n_ant; ++n) {
    for (double v : papr_db(core_slice(wf_ce[n], order), cfg.papr_window_symbols))
      out.papr_ce.push_back(v);
    for (double v : papr_db(core_slice(wf_zf[n], order), cfg.papr_window_symbols))
      out.papr_zf.push_back(v);
  }

  if (!ctx.sweep_points) return out;

  // Noise-free received signals for the ideal-PA paths, reused per point.
  std::vector<AntennaWaveform> ysig_ce = propagate(ch, wf_ce, 0.0, noise_seed);
  std::vector<AntennaWaveform> ysig_zf = propagate(ch, wf_zf, 0.0, noise_seed);

  std::vector<std::vector<int>> labels(k_users, std::vector<int>(n_sym));
  for (int m = 0; m < n_sym; ++m)
    for (int k = 0; k < k_users; ++k) labels[k][m] = qam16_demap(frames[m].symbols[k]);

  const int m_lo = order;
  const int m_hi = n_sym - order;
  std::uint64_t excluded_in_window = 0;
  for (int m = m_lo; m < m_hi; ++m)
    if (!feasible[m]) ++excluded_in_window;

  std::vector<AntennaWaveform> z(n_ant);
  std::vector<cplx> rx_buf, tx_buf;
  for (int ip = 0; ip < n_points; ++ip) {
    const double r_db = cfg.tx_power_sweep_db[ip];
    const double rms0 = ctx.geo_a1db * std::pow(10.0, -(cfg.backoff_anchor_db - r_db) / 20.0);
    const double sigma =
        zf.beta * std::pow(10.0, -(cfg.noise_ref_snr_db + r_db) / 20.0);

    for (int lane = 0; lane < kNumLanes; ++lane) {
      if (!ce_usable && lane != kLaneZfSum) continue;
      const bool is_ce = lane == kLaneCe;
      const auto& wf = is_ce ? wf_ce : wf_zf;
      const auto& rms = is_ce ? rms_ce : rms_zf;
      const auto& ysig = is_ce ? ysig_ce : ysig_zf;
      const double lane_gain = lane == kLaneZfEirp ? eirp_ratio : 1.0;
      const double rms_t = rms0 * lane_gain;
      const cplx gain_ref = is_ce ? cplx(1.0, 0.0)
                                  : cplx(lane == kLaneZfEirp ? alpha_bar : zf.beta, 0.0);

      for (int mode = 0; mode < 2; ++mode) {
        LaneAccum& acc =
            out.accums[(static_cast<std::size_t>(lane) * 2 + mode) * n_points + ip];
        acc.excluded_frames = is_ce ? excluded_in_window : 0;

        for (int n = 0; n < n_ant; ++n)
          acc.backoff_sum += 20.0 * std::log10(ctx.a1db[n] / rms_t);
        acc.backoff_terms += n_ant;

        std::vector<AntennaWaveform> y(k_users);
        if (mode == static_cast<int>(PaMode::Ideal)) {
          for (int k = 0; k < k_users; ++k) {
            y[k] = ysig[k];
            if (lane_gain != 1.0)
              for (auto& v : y[k].samples) v *= lane_gain;
            add_noise(y[k], sigma, noise_seed, k);
          }
        } else {
          for (int n = 0; n < n_ant; ++n) {
            const double scale_in = rms_t / rms[n];
            const double scale_out = rms0 / rms[n];
            AntennaWaveform drv = wf[n];
            for (auto& v : drv.samples) v *= scale_in;
            z[n] = pa_apply((*ctx.bank)[n], drv);
            const double inv = 1.0 / scale_out;
            for (auto& v : z[n].samples) v *= inv;
          }
          y = propagate(ch, z, sigma, noise_seed);
        }

        for (int k = 0; k < k_users; ++k) {
          RxFrame rx = receive(y[k], filter, gain_ref, k);
          rx_buf.clear();
          tx_buf.clear();
          std::vector<int> lab;
          lab.reserve(m_hi - m_lo);
          for (int m = m_lo; m < m_hi; ++m) {
            if (is_ce) {
              if (!feasible[m]) continue;
              rx_buf.push_back(rx.symbols[m] / alphas[m]);
            } else {
              rx_buf.push_back(rx.symbols[m]);
            }
            tx_buf.push_back(frames[m].symbols[k]);
            lab.push_back(labels[k][m]);
          }
          if (rx_buf.empty()) continue;
          const auto fit = fit_gain(rx_buf, tx_buf);
          acc.sinr_num += fit.signal_power;
          acc.sinr_den += fit.residual_power;
          std::vector<cplx> eq(rx_buf.size());
          const cplx inv_g = std::abs(fit.gain) > 0.0 ? 1.0 / fit.gain : cplx(1.0, 0.0);
          for (std::size_t i = 0; i < rx_buf.size(); ++i) eq[i] = rx_buf[i] * inv_g;
          const BerCount c = detect_and_ber(eq, lab);
          acc.bit_errors += c.bit_errors;
          acc.bits += c.bits;
        }
      }
    }
  }
  return out;
}

inline std::vector<double> ccdf_threshold_grid() {
  std::vector<double> t;
  for (int i = 0; i <= 130; ++i) t.push_back(i * 0.1);
  return t;
}

}  // namespace detail

// EIRP-matched ZF sum power: the ZF transmit power at which its useful
// received amplitude equals the CE precoder's.
inline double eirp_align(double ce_alpha, double zf_beta, double p_t) {
  if (!(ce_alpha > 0.0) || !(zf_beta > 0.0) || !(p_t > 0.0))
    fail("config", "eirp_align requires positive arguments",
         {{"ce_alpha", num_str(ce_alpha)},
          {"zf_beta", num_str(zf_beta)},
          {"p_t", num_str(p_t)}});
  const double r = ce_alpha / zf_beta;
  return p_t * r * r;
}

inline StudyOutput run_study(const ExperimentConfig& cfg, int threads = 1,
                             bool sweep_points = true) {
  validate(cfg);
  if (threads < 1) fail("config", "run_study requires threads >= 1",
                        {{"threads", std::to_string(threads)}});

  StudyOutput study;
  study.config = cfg;
  study.bank = fit_pa_bank(cfg.pa_config, cfg.n_antennas);

  detail::TrialContext ctx;
  ctx.cfg = &cfg;
  RrcFilter filter = rrc_taps(cfg.rrc_order, cfg.rrc_rolloff, cfg.oversampling);
  ctx.filter = &filter;
  ctx.bank = &study.bank;
  ctx.sweep_points = sweep_points;
  ctx.a1db.resize(cfg.n_antennas);
  double log_sum = 0.0;
  for (int n = 0; n < cfg.n_antennas; ++n) {
    ctx.a1db[n] = compression_point_1db(study.bank[n]);
    log_sum += std::log(ctx.a1db[n]);
  }
  ctx.geo_a1db = std::exp(log_sum / cfg.n_antennas);
  study.geo_a1db = ctx.geo_a1db;

  const int n_trials = cfg.n_trials;
  std::vector<detail::TrialOutput> trial_out(n_trials);
  if (threads == 1) {
    for (int t = 0; t < n_trials; ++t) trial_out[t] = detail::run_trial(ctx, t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (;;) {
            const int t = next.fetch_add(1);
            if (t >= n_trials) break;
            trial_out[t] = detail::run_trial(ctx, t);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Ordered reduction over trials; results are independent of thread count.
  const int n_points = static_cast<int>(cfg.tx_power_sweep_db.size());
  std::vector<detail::LaneAccum> total(static_cast<std::size_t>(detail::kNumLanes) * 2 *
                                       n_points);
  double mui_num_ce = 0.0, mui_den_ce = 0.0, mui_num_zf = 0.0, mui_den_zf = 0.0;
  std::vector<double> papr_ce, papr_zf;
  double eirp_sum = 0.0;
  study.infeasible_per_trial.resize(n_trials);
  for (int t = 0; t < n_trials; ++t) {
    const auto& to = trial_out[t];
    for (std::size_t i = 0; i < total.size(); ++i) {
      total[i].sinr_num += to.accums[i].sinr_num;
      total[i].sinr_den += to.accums[i].sinr_den;
      total[i].bit_errors += to.accums[i].bit_errors;
      total[i].bits += to.accums[i].bits;
      total[i].backoff_sum += to.accums[i].backoff_sum;
      total[i].backoff_terms += to.accums[i].backoff_terms;
      total[i].excluded_frames += to.accums[i].excluded_frames;
    }
    mui_num_ce += to.mui_num_ce;
    mui_den_ce += to.mui_den_ce;
    mui_num_zf += to.mui_num_zf;
    mui_den_zf += to.mui_den_zf;
    papr_ce.insert(papr_ce.end(), to.papr_ce.begin(), to.papr_ce.end());
    papr_zf.insert(papr_zf.end(), to.papr_zf.begin(), to.papr_zf.end());
    eirp_sum += to.eirp_offset_db;
    study.infeasible_per_trial[t] = to.infeasible;
  }
  study.total_frames =
      static_cast<std::uint64_t>(n_trials) * static_cast<std::uint64_t>(cfg.n_symbols_per_trial);
  study.mean_eirp_offset_db = eirp_sum / n_trials;

  const auto pooled_db = [](double num, double den, double cap) {
    if (!(num > 0.0)) return 0.0;
    if (den <= num * std::pow(10.0, -cap / 10.0)) return cap;
    return 10.0 * std::log10(num / den);
  };
  const double mui_ce_db = pooled_db(mui_num_ce, mui_den_ce, 300.0);
  const double mui_zf_db = pooled_db(mui_num_zf, mui_den_zf, 300.0);

  const auto grid = detail::ccdf_threshold_grid();
  study.ccdf_ce = ccdf(papr_ce, grid);
  study.ccdf_zf = ccdf(papr_zf, grid);

  if (!sweep_points) return study;

  const auto build = [&](PowerRegime regime, Precoder prec, PaMode mode) {
    SweepResult res;
    res.regime = regime;
    res.precoder = prec;
    res.pa_mode = mode;
    res.papr = prec == Precoder::CE ? study.ccdf_ce : study.ccdf_zf;
    int lane = detail::kLaneCe;
    if (prec == Precoder::ZF)
      lane = regime == PowerRegime::FixedEirp ? detail::kLaneZfEirp : detail::kLaneZfSum;
    for (int ip = 0; ip < n_points; ++ip) {
      const auto& acc =
          total[(static_cast<std::size_t>(lane) * 2 + static_cast<int>(mode)) * n_points + ip];
      SweepRow row;
      row.tx_power_rel_db = cfg.tx_power_sweep_db[ip];
      row.ber = acc.bits ? static_cast<double>(acc.bit_errors) / acc.bits : 0.0;
      row.sinr_db = acc.sinr_den > 0.0
                        ? std::min(10.0 * std::log10(acc.sinr_num / acc.sinr_den),
                                   cfg.sinr_ceiling_db)
                        : cfg.sinr_ceiling_db;
      row.mean_backoff_db = acc.backoff_terms ? acc.backoff_sum / acc.backoff_terms : 0.0;
      row.mui_ratio_db = prec == Precoder::CE ? mui_ce_db : mui_zf_db;
      row.p_sum_rel_db = lane == detail::kLaneZfEirp ? study.mean_eirp_offset_db : 0.0;
      row.bits = acc.bits;
      row.bit_errors = acc.bit_errors;
      row.excluded_frames = acc.excluded_frames;
      res.rows.push_back(row);
    }
    return res;
  };

  for (PowerRegime regime : {PowerRegime::FixedSumPower, PowerRegime::FixedEirp})
    for (Precoder prec : {Precoder::CE, Precoder::ZF})
      for (PaMode mode : {PaMode::Ideal, PaMode::Real})
        study.sweeps.push_back(build(regime, prec, mode));
  return study;
}

// The sweeps selected by the configured comparison regime.
inline std::vector<SweepResult> run_sweep(const ExperimentConfig& cfg, int threads = 1) {
  StudyOutput study = run_study(cfg, threads);
  std::vector<SweepResult> out;
  for (auto& s : study.sweeps)
    if (s.regime == cfg.power_regime) out.push_back(std::move(s));
  return out;
}

namespace detail {

inline std::vector<std::vector<std::string>> sweep_rows_csv(const StudyOutput& study,
                                                            PowerRegime regime) {
  std::vector<std::vector<std::string>> rows;
  const int n_points = static_cast<int>(study.config.tx_power_sweep_db.size());
  for (int ip = 0; ip < n_points; ++ip) {
    for (const auto prec : {Precoder::CE, Precoder::ZF}) {
      for (const auto mode : {PaMode::Ideal, PaMode::Real}) {
        const SweepResult* sel = nullptr;
        for (const auto& s : study.sweeps)
          if (s.regime == regime && s.precoder == prec && s.pa_mode == mode) sel = &s;
        if (!sel) continue;
        const SweepRow& r = sel->rows[ip];
        rows.push_back({fmt_num(r.tx_power_rel_db), to_string(prec), to_string(mode),
                        fmt_num(r.ber), fmt_num(r.sinr_db), fmt_num(r.mean_backoff_db),
                        fmt_num(r.mui_ratio_db), fmt_num(r.p_sum_rel_db),
                        std::to_string(r.bits), std::to_string(r.bit_errors),
                        std::to_string(r.excluded_frames)});
      }
    }
  }
  return rows;
}

}  // namespace detail

// Writes the figure CSVs and a manifest into out_dir; returns the manifest.
inline json emit(const StudyOutput& study, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail("io", "cannot create output directory", {{"path", out_dir}});

  const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  std::vector<std::string> outputs;

  const auto write_ccdf = [&](const char* name, const CcdfCurve& curve) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < curve.thresholds_db.size(); ++i)
      rows.push_back({fmt_num(curve.thresholds_db[i]), fmt_num(curve.probabilities[i])});
    write_csv(path(name), {"papr_db", "ccdf"}, rows);
    outputs.push_back(name);
    return rows.size();
  };
  const std::size_t fig1_rows = write_ccdf("fig1_ccdf_ce.csv", study.ccdf_ce) +
                                write_ccdf("fig1_ccdf_zf.csv", study.ccdf_zf);

  const std::vector<std::string> ber_header = {
      "tx_power_rel_db", "precoder",      "pa_mode", "ber",          "sinr_db",
      "mean_backoff_db", "mui_ratio_db",  "p_sum_rel_db", "bits",    "bit_errors",
      "excluded_frames"};

  json row_counts{{"fig1_ccdf", fig1_rows}};
  if (!study.sweeps.empty()) {
    const auto fig2 = detail::sweep_rows_csv(study, PowerRegime::FixedEirp);
    write_csv(path("fig2_ber_fixed_eirp.csv"), ber_header, fig2);
    outputs.push_back("fig2_ber_fixed_eirp.csv");

    const auto fig3 = detail::sweep_rows_csv(study, PowerRegime::FixedSumPower);
    write_csv(path("fig3_ber_fixed_txpower.csv"), ber_header, fig3);
    outputs.push_back("fig3_ber_fixed_txpower.csv");

    std::vector<std::vector<std::string>> fig4;
    for (const auto& row : fig3)
      fig4.push_back({row[0], row[1], row[2], row[4]});
    write_csv(path("fig4_sinr.csv"), {"tx_power_rel_db", "precoder", "pa_mode", "sinr_db"},
              fig4);
    outputs.push_back("fig4_sinr.csv");

    row_counts["fig2_ber_fixed_eirp"] = fig2.size();
    row_counts["fig3_ber_fixed_txpower"] = fig3.size();
    row_counts["fig4_sinr"] = fig4.size();
  }

  const json bank_json = bank_to_json(study.bank);
  std::uint64_t infeasible_total = 0;
  for (auto v : study.infeasible_per_trial) infeasible_total += v;

  json manifest{
      {"library", "cesim"},
      {"version", "0.1.0"},
      {"config", to_json(study.config)},
      {"seeds",
       {{"master_seed", study.config.master_seed},
        {"derivation", "splitmix64 finalizer over (master, fnv1a(tag), indices)"},
        {"tags", json::array({"chan", "sym", "noise", "pa"})}}},
      {"pa_bank",
       {{"hash_fnv1a64", fnv1a64(bank_json.dump())},
        {"geo_mean_a1db", study.geo_a1db},
        {"models", bank_json}}},
      {"frames",
       {{"total", study.total_frames},
        {"infeasible_total", infeasible_total},
        {"infeasible_per_trial", study.infeasible_per_trial}}},
      {"eirp", {{"mean_offset_db", study.mean_eirp_offset_db}}},
      {"rows", row_counts},
      {"outputs", outputs}};

  std::ofstream mf(path("manifest.json"), std::ios::binary);
  if (!mf) fail("io", "cannot open manifest for writing", {{"path", path("manifest.json")}});
  mf << manifest.dump(2) << '\n';
  if (!mf) fail("io", "failed writing manifest", {{"path", path("manifest.json")}});
  return manifest;
}

}  // namespace cesim
