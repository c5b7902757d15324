#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cesim/errors.hpp"
#include "cesim/model.hpp"

namespace cesim {

struct RrcFilter {
  std::vector<double> taps;  // length order * oversampling + 1, symmetric
  int order = 0;
  double rolloff = 0.0;
  int oversampling = 1;
};

struct AntennaWaveform {
  std::vector<cplx> samples;
  int oversampling = 1;
  int symbol_count = 0;
  int antenna_index = 0;
};

struct CcdfCurve {
  std::vector<double> thresholds_db;
  std::vector<double> probabilities;
};

// Root-raised-cosine taps spanning `order` symbol periods at L samples per
// symbol, unit energy, exactly symmetric. The removable singularities at
// t = 0 and |4 beta t| = 1 take their analytic limits.
inline RrcFilter rrc_taps(int order, double rolloff, int oversampling) {
  if (order < 0) fail("config", "rrc_taps requires order >= 0", {{"order", std::to_string(order)}});
  if (!(rolloff > 0.0) || rolloff > 1.0)
    fail("config", "rrc_taps requires rolloff in (0, 1]", {{"rolloff", num_str(rolloff)}});
  if (oversampling < 1)
    fail("config", "rrc_taps requires oversampling >= 1",
         {{"oversampling", std::to_string(oversampling)}});

  const int n_taps = order * oversampling + 1;
  const double mid = 0.5 * (n_taps - 1);
  const double b = rolloff;
  std::vector<double> taps(n_taps);

  for (int i = 0; 2 * i <= n_taps - 1; ++i) {
    const double t = (i - mid) / oversampling;  // symbol periods
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - b + 4.0 * b / std::numbers::pi;
    } else {
      const double d = 1.0 - 16.0 * b * b * t * t;
      if (std::abs(d) < 1e-9) {
        const double c = std::numbers::pi / (4.0 * b);
        v = (b / std::numbers::sqrt2) *
            ((1.0 + 2.0 / std::numbers::pi) * std::sin(c) +
             (1.0 - 2.0 / std::numbers::pi) * std::cos(c));
      } else {
        v = (std::sin(std::numbers::pi * t * (1.0 - b)) +
             4.0 * b * t * std::cos(std::numbers::pi * t * (1.0 + b))) /
            (std::numbers::pi * t * d);
      }
    }
    taps[i] = v;
    taps[n_taps - 1 - i] = v;
  }

  double energy = 0.0;
  for (double v : taps) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (int i = 0; 2 * i <= n_taps - 1; ++i) {
    taps[i] *= scale;
    taps[n_taps - 1 - i] = taps[i];
  }

  RrcFilter f;
  f.taps = std::move(taps);
  f.order = order;
  f.rolloff = rolloff;
  f.oversampling = oversampling;
  return f;
}

// Zero-stuff by L and apply the full convolution with the shaping filter.
// Output length symbol_count * L + order * L; symbol m peaks at index
// m * L + (taps - 1) / 2.
inline AntennaWaveform shape(const std::vector<cplx>& symbols, const RrcFilter& f,
                             int antenna_index = 0) {
  if (symbols.empty()) fail("dimension", "shape requires at least one symbol");
  const int n_sym = static_cast<int>(symbols.size());
  const int l = f.oversampling;
  const int n_taps = static_cast<int>(f.taps.size());

  AntennaWaveform wf;
  wf.oversampling = l;
  wf.symbol_count = n_sym;
  wf.antenna_index = antenna_index;
  wf.samples.assign(static_cast<std::size_t>(n_sym) * l + (n_taps - 1), cplx(0.0, 0.0));
  for (int m = 0; m < n_sym; ++m) {
    const cplx s = symbols[m];
    if (s == cplx(0.0, 0.0)) continue;
    cplx* out = wf.samples.data() + static_cast<std::size_t>(m) * l;
    for (int j = 0; j < n_taps; ++j) out[j] += s * f.taps[j];
  }
  return wf;
}

// Per-window peak-to-average power over non-overlapping windows of
// window_symbols * L samples; a trailing partial window is discarded.
inline std::vector<double> papr_db(const AntennaWaveform& wf, int window_symbols) {
  if (window_symbols < 1)
    fail("config", "papr_db requires window_symbols >= 1",
         {{"window_symbols", std::to_string(window_symbols)}});
  const std::size_t win = static_cast<std::size_t>(window_symbols) * wf.oversampling;
  const std::size_t n_win = wf.samples.size() / win;
  if (n_win == 0)
    fail("dimension", "papr_db requires at least one full window",
         {{"samples", std::to_string(wf.samples.size())},
          {"window", std::to_string(win)}});
  std::vector<double> out(n_win);
  for (std::size_t w = 0; w < n_win; ++w) {
    const cplx* seg = wf.samples.data() + w * win;
    double peak = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      const double p = std::norm(seg[i]);
      peak = std::max(peak, p);
      mean += p;
    }
    mean /= static_cast<double>(win);
    if (mean <= 0.0)
      fail("degenerate", "papr_db window has zero mean power",
           {{"window_index", std::to_string(w)}});
    out[w] = 10.0 * std::log10(peak / mean);
  }
  return out;
}

// Empirical complementary CDF with strict exceedance: P[value > threshold].
inline CcdfCurve ccdf(const std::vector<double>& values_db,
                      const std::vector<double>& thresholds_db) {
  if (values_db.empty()) fail("dimension", "ccdf requires at least one value");
  if (thresholds_db.empty()) fail("dimension", "ccdf requires at least one threshold");
  for (std::size_t i = 0; i + 1 < thresholds_db.size(); ++i)
    if (!(thresholds_db[i] < thresholds_db[i + 1]))
      fail("config", "ccdf thresholds must be strictly ascending");
  CcdfCurve curve;
  curve.thresholds_db = thresholds_db;
  curve.probabilities.resize(thresholds_db.size());
  const double n = static_cast<double>(values_db.size());
  for (std::size_t i = 0; i < thresholds_db.size(); ++i) {
    std::size_t count = 0;
    for (double v : values_db)
      if (v > thresholds_db[i]) ++count;
    curve.probabilities[i] = static_cast<double>(count) / n;
  }
  return curve;
}

}  // namespace cesim
