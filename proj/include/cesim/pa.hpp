#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cesim/config.hpp"
#include "cesim/errors.hpp"
#include "cesim/rng.hpp"
#include "cesim/waveform.hpp"

namespace cesim {

struct PaModel {
  std::vector<cplx> coeffs;  // b1, b3, b5, b7, b9
  double clip_in = 0.0;
  int antenna_index = 0;
};

namespace detail {

// Saturating reference AM/AM curve with knee sharpness p.
inline double rapp_amam(double a, double smoothness, double sat_out) {
  const double r = a / sat_out;
  return a / std::pow(1.0 + std::pow(r * r, smoothness), 1.0 / (2.0 * smoothness));
}

inline cplx pa_poly(const PaModel& m, double a) {
  const double a2 = a * a;
  cplx acc = m.coeffs[4];
  for (int j = 3; j >= 0; --j) acc = acc * a2 + m.coeffs[j];
  return acc * a;
}

inline double pa_gain_abs(const PaModel& m, double a) { return std::abs(pa_poly(m, a)); }

// d/dA of |poly|^2, for locating the first stationary point.
inline double pa_gain_sq_slope(const PaModel& m, double a) {
  const double a2 = a * a;
  cplx v = m.coeffs[4];
  cplx dv = 9.0 * m.coeffs[4];
  for (int j = 3; j >= 0; --j) {
    v = v * a2 + m.coeffs[j];
    dv = dv * a2 + static_cast<double>(2 * j + 1) * m.coeffs[j];
  }
  // poly = a*v(a^2), poly' = dv(a^2) with the odd powers folded in.
  return 2.0 * std::real(std::conj(a * v) * dv);
}

// Least-squares odd-polynomial fit (orders 1, 3, 5, 7, 9). Errors if the
// residual RMS exceeds 5% of sat_out.
inline std::vector<double> fit_odd_poly(const std::vector<double>& x,
                                        const std::vector<double>& y, double sat_out) {
  const int n = static_cast<int>(x.size());
  if (n < 5 || y.size() != x.size())
    fail("dimension", "fit_odd_poly requires >= 5 matched points",
         {{"points", std::to_string(n)}});
  Eigen::MatrixXd design(n, 5);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double a2 = x[i] * x[i];
    double p = x[i];
    for (int j = 0; j < 5; ++j) {
      design(i, j) = p;
      p *= a2;
    }
    rhs(i) = y[i];
  }
  const Eigen::VectorXd b = design.colPivHouseholderQr().solve(rhs);
  const double resid_rms = std::sqrt((design * b - rhs).squaredNorm() / n);
  if (resid_rms > 0.05 * sat_out)
    fail("fit_quality", "polynomial fit residual exceeds 5% of sat_out",
         {{"resid_rms", num_str(resid_rms)}, {"sat_out", num_str(sat_out)}});
  return {b(0), b(1), b(2), b(3), b(4)};
}

// First stationary point of the AM/AM curve, searched slightly past the fit
// range because a gently saturating reference makes the polynomial roll over
// just beyond it. A sharply saturating reference instead leaves the fitted
// polynomial rising through the whole search span (its leading coefficient
// stays positive); the curve is then trusted only up to the fit edge, which
// is where it attains its maximum over the modeled range.
inline double find_clip_in(const PaModel& m, double sat_out) {
  const double hi = 3.0 * sat_out;
  const int n_grid = 3000;
  double prev = 0.0;
  for (int i = 1; i <= n_grid; ++i) {
    const double a = hi * i / n_grid;
    if (pa_gain_sq_slope(m, a) <= 0.0) {
      double lo_a = prev;
      double hi_a = a;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo_a + hi_a);
        (pa_gain_sq_slope(m, mid) > 0.0 ? lo_a : hi_a) = mid;
      }
      return 0.5 * (lo_a + hi_a);
    }
    prev = a;
  }
  return 1.2 * sat_out;
}

inline void check_monotone_below_clip(const PaModel& m) {
  const int n_grid = 1000;
  double prev = 0.0;
  for (int i = 1; i <= n_grid; ++i) {
    const double a = m.clip_in * i / n_grid;
    const double g = pa_gain_abs(m, a);
    if (g < prev * (1.0 - 1e-12))
      fail("degenerate", "AM/AM curve not monotone below clip_in",
           {{"antenna", std::to_string(m.antenna_index)}, {"amplitude", num_str(a)}});
    prev = g;
  }
}

}  // namespace detail

// Input amplitude where the gain has dropped 1 dB below small-signal |b1|,
// found by bisection to 1e-6 relative width.
inline double compression_point_1db(const PaModel& m) {
  if (m.coeffs.size() != 5)
    fail("dimension", "PA model requires 5 odd-order coefficients",
         {{"coeffs", std::to_string(m.coeffs.size())}});
  const double b1 = std::abs(m.coeffs[0]);
  if (!(b1 > 0.0)) fail("degenerate", "PA small-signal gain must be nonzero");
  if (!(m.clip_in > 0.0)) fail("degenerate", "PA clip_in must be positive");
  const double target = std::pow(10.0, -1.0 / 20.0);

  const auto rel_gain = [&](double a) { return detail::pa_gain_abs(m, a) / (b1 * a); };
  if (rel_gain(m.clip_in) > target)
    fail("not_compressive", "PA never compresses by 1 dB below clip_in",
         {{"clip_in", num_str(m.clip_in)},
          {"rel_gain_at_clip", num_str(rel_gain(m.clip_in))}});

  double lo = m.clip_in * 1e-9;
  double hi = m.clip_in;
  while ((hi - lo) > 1e-6 * m.clip_in) {
    const double mid = 0.5 * (lo + hi);
    (rel_gain(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Synthetic PA bank: fit a 9th-order odd polynomial to a saturating
// reference curve, jitter the coefficients per antenna, then freeze each
// curve at its first stationary point.
inline std::vector<PaModel> fit_pa_bank(const PaFitSpec& spec, int n_antennas) {
  validate(spec);
  if (n_antennas < 1)
    fail("dimension", "fit_pa_bank requires n_antennas >= 1",
         {{"n_antennas", std::to_string(n_antennas)}});

  std::vector<double> xs(spec.fit_grid), ys(spec.fit_grid);
  for (int i = 0; i < spec.fit_grid; ++i) {
    xs[i] = 1.2 * spec.sat_out * (i + 1) / spec.fit_grid;
    ys[i] = detail::rapp_amam(xs[i], spec.smoothness, spec.sat_out);
  }
  const std::vector<double> base = detail::fit_odd_poly(xs, ys, spec.sat_out);

  std::vector<PaModel> bank;
  bank.reserve(n_antennas);
  for (int n = 0; n < n_antennas; ++n) {
    Rng rng(derive_seed(spec.seed, "pa", static_cast<std::uint64_t>(n)));
    PaModel m;
    m.antenna_index = n;
    m.coeffs.resize(5);
    for (int j = 0; j < 5; ++j)
      m.coeffs[j] = cplx(base[j] * (1.0 + spec.perturbation_rel * rng.normal()), 0.0);
    if (!(std::abs(m.coeffs[0]) > 0.0))
      fail("degenerate", "jittered small-signal gain vanished",
           {{"antenna", std::to_string(n)}});
    m.clip_in = detail::find_clip_in(m, spec.sat_out);
    detail::check_monotone_below_clip(m);
    bank.push_back(std::move(m));
  }
  return bank;
}

// Memoryless AM/AM polynomial, frozen at clip_in: above the clip point the
// output magnitude stays at |poly(clip_in)| while the input phase passes
// through unchanged.
inline AntennaWaveform pa_apply(const PaModel& m, const AntennaWaveform& in) {
  if (m.coeffs.size() != 5)
    fail("dimension", "PA model requires 5 odd-order coefficients",
         {{"coeffs", std::to_string(m.coeffs.size())}});
  if (!(m.clip_in > 0.0)) fail("degenerate", "PA clip_in must be positive");
  AntennaWaveform out = in;
  out.antenna_index = m.antenna_index;
  for (auto& x : out.samples) {
    const double a = std::abs(x);
    if (a == 0.0) continue;
    const double ae = a < m.clip_in ? a : m.clip_in;
    x = (x / a) * detail::pa_poly(m, ae);
  }
  return out;
}

struct DriveResult {
  AntennaWaveform waveform;
  double scale = 0.0;
  double backoff_db = 0.0;
};

// Scale a waveform to a target RMS amplitude at the PA input and report the
// back-off of the 1 dB compression point relative to that drive level.
inline DriveResult drive_at_power(const AntennaWaveform& wf, const PaModel& m,
                                  double rms_target) {
  if (!(rms_target > 0.0))
    fail("config", "drive_at_power requires rms_target > 0",
         {{"rms_target", num_str(rms_target)}});
  if (wf.samples.empty()) fail("dimension", "drive_at_power requires a non-empty waveform");
  double p = 0.0;
  for (const auto& x : wf.samples) p += std::norm(x);
  const double rms = std::sqrt(p / static_cast<double>(wf.samples.size()));
  if (!(rms > 0.0)) fail("degenerate", "drive_at_power requires a nonzero waveform");

  DriveResult r;
  r.scale = rms_target / rms;
  r.waveform = wf;
  for (auto& x : r.waveform.samples) x *= r.scale;
  r.backoff_db = 20.0 * std::log10(compression_point_1db(m) / rms_target);
  return r;
}

inline json bank_to_json(const std::vector<PaModel>& bank) {
  json arr = json::array();
  for (const auto& m : bank) {
    json coeffs = json::array();
    for (const auto& c : m.coeffs) coeffs.push_back(json::array({c.real(), c.imag()}));
    arr.push_back(json{{"antenna_index", m.antenna_index},
                       {"clip_in", m.clip_in},
                       {"coeffs", coeffs}});
  }
  return arr;
}

inline std::vector<PaModel> bank_from_json(const json& arr) {
  if (!arr.is_array()) fail("io", "PA bank JSON must be an array");
  std::vector<PaModel> bank;
  bank.reserve(arr.size());
  for (const auto& jm : arr) {
    detail::expect_keys(jm, "pa_bank.", {"antenna_index", "clip_in", "coeffs"});
    PaModel m;
    m.antenna_index = jm.at("antenna_index").get<int>();
    m.clip_in = jm.at("clip_in").get<double>();
    for (const auto& jc : jm.at("coeffs"))
      m.coeffs.emplace_back(jc.at(0).get<double>(), jc.at(1).get<double>());
    if (m.coeffs.size() != 5) fail("io", "PA bank entry must carry 5 coefficients");
    bank.push_back(std::move(m));
  }
  return bank;
}

}  // namespace cesim
