#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cesim/config.hpp"
#include "cesim/errors.hpp"
#include "cesim/model.hpp"

namespace cesim {

struct ZfPrecoder {
  std::vector<cplx> weights;  // row-major, N_t rows by K columns
  int n_antennas = 0;
  int k_users = 0;
  double beta = 0.0;

  cplx at(int n, int k) const { return weights[static_cast<std::size_t>(n) * k_users + k]; }
};

struct CeSolution {
  std::vector<double> phases;  // length N_t, wrapped to [-pi, pi)
  double alpha = 0.0;
  double objective = 0.0;
  double mui_ratio_db = 0.0;
};

namespace detail {

using MatC = Eigen::MatrixXcd;

inline MatC channel_matrix(const MuChannel& ch) {
  return Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      ch.entries.data(), ch.k_users, ch.n_antennas);
}

inline double wrap_phase(double th) {
  double x = std::remainder(th, 2.0 * std::numbers::pi);
  if (x >= std::numbers::pi) x -= 2.0 * std::numbers::pi;
  if (x < -std::numbers::pi) x += 2.0 * std::numbers::pi;
  return x;
}

inline void check_frame(const MuChannel& ch, const SymbolFrame& frame) {
  if (static_cast<int>(frame.symbols.size()) != ch.k_users)
    fail("dimension", "symbol frame length must equal k_users",
         {{"frame", std::to_string(frame.symbols.size())},
          {"k_users", std::to_string(ch.k_users)}});
}

inline double frame_energy(const SymbolFrame& frame) {
  double e = 0.0;
  for (cplx s : frame.symbols) e += std::norm(s);
  return e;
}

// Signal-to-MUI ratio in dB for residual objective f, guarded against
// an exactly zero residual.
inline double mui_ratio_from(double alpha, double sym_energy, double f) {
  const double num = alpha * alpha * sym_energy;
  const double f_eff = std::max(f, num * 1e-30);
  return 10.0 * std::log10(num / f_eff);
}

}  // namespace detail

inline ZfPrecoder zf_weights(const MuChannel& ch, double p_t) {
  if (ch.k_users <= 0 || ch.n_antennas < ch.k_users)
    fail("dimension", "zf_weights requires N_t >= K >= 1",
         {{"k_users", std::to_string(ch.k_users)},
          {"n_antennas", std::to_string(ch.n_antennas)}});
  if (!(p_t > 0.0)) fail("config", "zf_weights requires p_t > 0", {{"p_t", num_str(p_t)}});

  const detail::MatC h = detail::channel_matrix(ch);
  const detail::MatC gram = h * h.adjoint();

  Eigen::JacobiSVD<detail::MatC> svd(gram);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12))
    fail("numerical_rank", "channel Gram matrix is numerically rank-deficient",
         {{"condition", num_str(cond)}});

  const detail::MatC gram_inv = gram.inverse();
  const double tr = gram_inv.trace().real();
  if (!(tr > 0.0))
    fail("numerical_rank", "non-positive trace of inverse Gram matrix",
         {{"trace", num_str(tr)}});

  ZfPrecoder zf;
  zf.n_antennas = ch.n_antennas;
  zf.k_users = ch.k_users;
  zf.beta = std::sqrt(p_t / tr);
  const detail::MatC w = zf.beta * (h.adjoint() * gram_inv);
  zf.weights.resize(static_cast<std::size_t>(ch.n_antennas) * ch.k_users);
  for (int n = 0; n < ch.n_antennas; ++n)
    for (int k = 0; k < ch.k_users; ++k)
      zf.weights[static_cast<std::size_t>(n) * ch.k_users + k] = w(n, k);
  return zf;
}

inline PrecodedFrame apply_linear(const ZfPrecoder& zf, const SymbolFrame& frame) {
  if (static_cast<int>(frame.symbols.size()) != zf.k_users)
    fail("dimension", "symbol frame length must equal k_users",
         {{"frame", std::to_string(frame.symbols.size())},
          {"k_users", std::to_string(zf.k_users)}});
  PrecodedFrame out;
  out.samples.assign(zf.n_antennas, cplx(0.0, 0.0));
  for (int n = 0; n < zf.n_antennas; ++n) {
    cplx acc(0.0, 0.0);
    for (int k = 0; k < zf.k_users; ++k) acc += zf.at(n, k) * frame.symbols[k];
    out.samples[n] = acc;
  }
  double wp = 0.0;
  for (cplx w : zf.weights) wp += std::norm(w);
  out.sum_power_target = wp;  // equals p_t by construction
  return out;
}

// f(theta, s) = sum_k | sqrt(P_t/N_t) sum_n h_kn e^{j theta_n} - alpha s_k |^2
inline double ce_objective(const std::vector<double>& phases, const MuChannel& ch,
                           const SymbolFrame& frame, double alpha, double p_t) {
  detail::check_frame(ch, frame);
  if (static_cast<int>(phases.size()) != ch.n_antennas)
    fail("dimension", "phase vector length must equal n_antennas",
         {{"phases", std::to_string(phases.size())},
          {"n_antennas", std::to_string(ch.n_antennas)}});
  const double q = std::sqrt(p_t / ch.n_antennas);
  std::vector<cplx> unit(ch.n_antennas);
  for (int n = 0; n < ch.n_antennas; ++n) unit[n] = std::polar(1.0, phases[n]);
  double f = 0.0;
  for (int k = 0; k < ch.k_users; ++k) {
    cplx acc(0.0, 0.0);
    for (int n = 0; n < ch.n_antennas; ++n) acc += ch.at(k, n) * unit[n];
    f += std::norm(q * acc - alpha * frame.symbols[k]);
  }
  return f;
}

// Analytic partial derivatives of ce_objective. With residual
// e_k = sqrt(P_t/N_t) sum_n h_kn e^{j theta_n} - alpha s_k and per-antenna
// contribution d_kn = sqrt(P_t/N_t) h_kn e^{j theta_n}:
//   df/dtheta_n = 2 sum_k Im{ e_k conj(d_kn) }.
inline std::vector<double> ce_gradient(const std::vector<double>& phases, const MuChannel& ch,
                                       const SymbolFrame& frame, double alpha, double p_t) {
  detail::check_frame(ch, frame);
  if (static_cast<int>(phases.size()) != ch.n_antennas)
    fail("dimension", "phase vector length must equal n_antennas",
         {{"phases", std::to_string(phases.size())},
          {"n_antennas", std::to_string(ch.n_antennas)}});
  const double q = std::sqrt(p_t / ch.n_antennas);
  std::vector<cplx> unit(ch.n_antennas);
  for (int n = 0; n < ch.n_antennas; ++n) unit[n] = std::polar(1.0, phases[n]);
  std::vector<cplx> resid(ch.k_users);
  for (int k = 0; k < ch.k_users; ++k) {
    cplx acc(0.0, 0.0);
    for (int n = 0; n < ch.n_antennas; ++n) acc += ch.at(k, n) * unit[n];
    resid[k] = q * acc - alpha * frame.symbols[k];
  }
  std::vector<double> grad(ch.n_antennas, 0.0);
  for (int n = 0; n < ch.n_antennas; ++n) {
    double g = 0.0;
    for (int k = 0; k < ch.k_users; ++k) {
      const cplx d = q * ch.at(k, n) * unit[n];
      g += std::imag(resid[k] * std::conj(d));
    }
    grad[n] = 2.0 * g;
  }
  return grad;
}

// Cyclic coordinate descent: for each antenna, M gradient sub-iterations
// with the best sub-iterate retained.
inline CeSolution ce_optimize(const MuChannel& ch, const SymbolFrame& frame, double alpha,
                              double p_t, const CeOptions& opts,
                              const std::vector<double>* warm_start = nullptr) {
  detail::check_frame(ch, frame);
  validate(opts);
  if (!(alpha > 0.0)) fail("config", "ce_optimize requires alpha > 0", {{"alpha", num_str(alpha)}});
  if (!(p_t > 0.0)) fail("config", "ce_optimize requires p_t > 0", {{"p_t", num_str(p_t)}});

  const int n_ant = ch.n_antennas;
  const int k_users = ch.k_users;
  const double q = std::sqrt(p_t / n_ant);
  const double mu = ce_effective_step(opts, p_t, k_users);

  std::vector<double> theta(n_ant, 0.0);
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != n_ant)
      fail("dimension", "warm start length must equal n_antennas",
           {{"warm_start", std::to_string(warm_start->size())}});
    for (int n = 0; n < n_ant; ++n) theta[n] = detail::wrap_phase((*warm_start)[n]);
  }

  // Running combined signal per user, updated one antenna at a time.
  std::vector<cplx> combined(k_users, cplx(0.0, 0.0));
  for (int k = 0; k < k_users; ++k) {
    cplx acc(0.0, 0.0);
    for (int n = 0; n < n_ant; ++n) acc += ch.at(k, n) * std::polar(1.0, theta[n]);
    combined[k] = q * acc;
  }

  std::vector<cplx> base(k_users);
  for (int pass = 0; pass < opts.n_passes; ++pass) {
    for (int n = 0; n < n_ant; ++n) {
      for (int k = 0; k < k_users; ++k)
        base[k] = combined[k] - q * ch.at(k, n) * std::polar(1.0, theta[n]);

      double cur = theta[n];
      double best_f = std::numeric_limits<double>::infinity();
      double best_th = cur;
      for (int m = 0; m < opts.m_subiters; ++m) {
        const cplx rot = std::polar(1.0, cur);
        double f = 0.0;
        double g = 0.0;
        for (int k = 0; k < k_users; ++k) {
          const cplx d = q * ch.at(k, n) * rot;
          const cplx e = base[k] + d - alpha * frame.symbols[k];
          f += std::norm(e);
          g += std::imag(e * std::conj(d));
        }
        g *= 2.0;
        if (!std::isfinite(f))
          fail("divergence", "non-finite objective during CE optimization",
               {{"pass", std::to_string(pass)},
                {"antenna", std::to_string(n)},
                {"subiter", std::to_string(m)},
                {"step_size", num_str(mu)}});
        if (f < best_f) {
          best_f = f;
          best_th = cur;
        }
        cur = detail::wrap_phase(cur - mu * g);
      }
      theta[n] = detail::wrap_phase(best_th);
      for (int k = 0; k < k_users; ++k)
        combined[k] = base[k] + q * ch.at(k, n) * std::polar(1.0, theta[n]);
    }
  }

  CeSolution sol;
  sol.phases = std::move(theta);
  sol.alpha = alpha;
  sol.objective = ce_objective(sol.phases, ch, frame, alpha, p_t);
  sol.mui_ratio_db = detail::mui_ratio_from(alpha, detail::frame_energy(frame), sol.objective);
  return sol;
}

// Largest alpha whose achieved signal-to-MUI ratio meets the target;
// descending-grid or bisection strategy between beta_zf and its span floor.
inline CeSolution ce_alpha_search(const MuChannel& ch, const SymbolFrame& frame, double p_t,
                                  double mui_target_db, const CeOptions& opts) {
  detail::check_frame(ch, frame);
  validate(opts);
  const double beta = zf_weights(ch, p_t).beta;

  const auto solve_at = [&](double alpha, const std::vector<double>* warm) {
    return ce_optimize(ch, frame, alpha, p_t, opts, warm);
  };
  const auto alpha_at_db = [&](double down_db) { return beta * std::pow(10.0, -down_db / 20.0); };

  double best_ratio = -std::numeric_limits<double>::infinity();
  const auto infeasible = [&]() -> SimError {
    return SimError("infeasible", "no feasible alpha within the search span",
                    {{"best_mui_ratio_db", num_str(best_ratio)},
                     {"mui_target_db", num_str(mui_target_db)},
                     {"beta_zf", num_str(beta)},
                     {"alpha_span_db", num_str(opts.alpha_span_db)}});
  };

  if (opts.alpha_search == AlphaSearch::Grid) {
    const int n_steps =
        static_cast<int>(std::llround(opts.alpha_span_db / opts.alpha_resolution_db));
    std::vector<double> warm;
    const std::vector<double>* warm_ptr = nullptr;
    for (int i = 0; i <= n_steps; ++i) {
      CeSolution sol = solve_at(alpha_at_db(i * opts.alpha_resolution_db), warm_ptr);
      best_ratio = std::max(best_ratio, sol.mui_ratio_db);
      if (sol.mui_ratio_db >= mui_target_db) return sol;
      warm = sol.phases;
      warm_ptr = &warm;
    }
    throw infeasible();
  }

  // Exponential descent from beta with warm starts, then bisection on the
  // bracket. What the optimizer can achieve at a given alpha depends heavily
  // on its warm start, so the descent keeps early steps small where the
  // previous solution is most useful and doubles once it is far from beta.
  CeSolution hi_sol = solve_at(beta, nullptr);
  best_ratio = std::max(best_ratio, hi_sol.mui_ratio_db);
  if (hi_sol.mui_ratio_db >= mui_target_db) return hi_sol;

  double lo_db = 0.0;  // infeasible end (down-shift from beta, dB)
  double hi_db = 0.0;
  CeSolution feas;
  bool have_feasible = false;
  std::vector<double> warm = hi_sol.phases;
  double d = std::min(opts.alpha_resolution_db, opts.alpha_span_db);
  while (true) {
    CeSolution sol = solve_at(alpha_at_db(d), &warm);
    best_ratio = std::max(best_ratio, sol.mui_ratio_db);
    if (sol.mui_ratio_db >= mui_target_db) {
      hi_db = d;
      feas = std::move(sol);
      have_feasible = true;
      break;
    }
    lo_db = d;
    warm = std::move(sol.phases);
    if (d >= opts.alpha_span_db) break;
    d = std::min(2.0 * d, opts.alpha_span_db);
  }
  if (!have_feasible) throw infeasible();

  for (int it = 0; it < opts.max_alpha_iters && hi_db - lo_db > opts.alpha_resolution_db; ++it) {
    const double mid_db = 0.5 * (lo_db + hi_db);
    CeSolution sol = solve_at(alpha_at_db(mid_db), &feas.phases);
    best_ratio = std::max(best_ratio, sol.mui_ratio_db);
    if (sol.mui_ratio_db >= mui_target_db) {
      hi_db = mid_db;
      feas = std::move(sol);
    } else {
      lo_db = mid_db;
    }
  }
  return feas;
}

// Exhaustive oracle on a uniform phase grid.
inline CeSolution ce_brute_force(const MuChannel& ch, const SymbolFrame& frame, double alpha,
                                 double p_t, int grid_size) {
  detail::check_frame(ch, frame);
  if (grid_size < 2) fail("config", "ce_brute_force requires grid_size >= 2");
  if (ch.n_antennas > 4)
    fail("capacity", "ce_brute_force supports at most 4 antennas",
         {{"n_antennas", std::to_string(ch.n_antennas)}});
  double combos = 1.0;
  for (int n = 0; n < ch.n_antennas; ++n) combos *= grid_size;
  if (combos > 1e7)
    fail("capacity", "ce_brute_force grid too large",
         {{"combinations", num_str(combos)}});

  const int n_ant = ch.n_antennas;
  const int k_users = ch.k_users;
  const double q = std::sqrt(p_t / n_ant);

  // Per-antenna, per-grid-point contributions.
  std::vector<std::vector<cplx>> contrib(n_ant, std::vector<cplx>(grid_size * k_users));
  std::vector<double> grid_phase(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    grid_phase[g] = -std::numbers::pi + 2.0 * std::numbers::pi * g / grid_size;
    const cplx rot = std::polar(1.0, grid_phase[g]);
    for (int n = 0; n < n_ant; ++n)
      for (int k = 0; k < k_users; ++k)
        contrib[n][static_cast<std::size_t>(g) * k_users + k] = q * ch.at(k, n) * rot;
  }

  std::vector<int> idx(n_ant, 0);
  std::vector<std::vector<cplx>> partial(n_ant + 1, std::vector<cplx>(k_users));
  for (int k = 0; k < k_users; ++k) partial[0][k] = -alpha * frame.symbols[k];
  for (int n = 0; n < n_ant; ++n)
    for (int k = 0; k < k_users; ++k)
      partial[n + 1][k] = partial[n][k] + contrib[n][k];

  double best_f = std::numeric_limits<double>::infinity();
  std::vector<int> best_idx = idx;
  for (;;) {
    double f = 0.0;
    for (int k = 0; k < k_users; ++k) f += std::norm(partial[n_ant][k]);
    if (f < best_f) {
      best_f = f;
      best_idx = idx;
    }
    int d = n_ant - 1;
    while (d >= 0 && idx[d] == grid_size - 1) --d;
    if (d < 0) break;
    ++idx[d];
    for (int n = d + 1; n < n_ant; ++n) idx[n] = 0;
    for (int n = d; n < n_ant; ++n) {
      const cplx* c = &contrib[n][static_cast<std::size_t>(idx[n]) * k_users];
      for (int k = 0; k < k_users; ++k) partial[n + 1][k] = partial[n][k] + c[k];
    }
  }

  CeSolution sol;
  sol.phases.resize(n_ant);
  for (int n = 0; n < n_ant; ++n) sol.phases[n] = detail::wrap_phase(grid_phase[best_idx[n]]);
  sol.alpha = alpha;
  sol.objective = ce_objective(sol.phases, ch, frame, alpha, p_t);
  sol.mui_ratio_db = detail::mui_ratio_from(alpha, detail::frame_energy(frame), sol.objective);
  return sol;
}

}  // namespace cesim
