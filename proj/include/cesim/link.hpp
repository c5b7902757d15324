#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "cesim/errors.hpp"
#include "cesim/model.hpp"
#include "cesim/rng.hpp"
#include "cesim/waveform.hpp"

namespace cesim {

struct RxFrame {
  std::vector<cplx> symbols;
  int user_index = 0;
};

struct LinkMetrics {
  double ber = 0.0;
  double sinr_db = 0.0;
  double mui_ratio_db = 0.0;
  double evm_rms = 0.0;
};

struct BerCount {
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;

  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
};

// Narrowband channel applied per sample plus circularly symmetric AWGN of
// per-sample total standard deviation noise_std. Per-user noise streams are
// derived from the seed, so equal seeds reproduce equal noise.
inline std::vector<AntennaWaveform> propagate(const MuChannel& ch,
                                              const std::vector<AntennaWaveform>& pa_outputs,
                                              double noise_std, std::uint64_t seed) {
  if (static_cast<int>(pa_outputs.size()) != ch.n_antennas)
    fail("dimension", "propagate requires one waveform per antenna",
         {{"waveforms", std::to_string(pa_outputs.size())},
          {"n_antennas", std::to_string(ch.n_antennas)}});
  if (!(noise_std >= 0.0))
    fail("config", "propagate requires noise_std >= 0", {{"noise_std", num_str(noise_std)}});
  const std::size_t len = pa_outputs[0].samples.size();
  for (const auto& wf : pa_outputs)
    if (wf.samples.size() != len || wf.oversampling != pa_outputs[0].oversampling ||
        wf.symbol_count != pa_outputs[0].symbol_count)
      fail("dimension", "propagate requires antenna waveforms of identical shape");

  std::vector<AntennaWaveform> out(ch.k_users);
  for (int k = 0; k < ch.k_users; ++k) {
    auto& y = out[k];
    y.oversampling = pa_outputs[0].oversampling;
    y.symbol_count = pa_outputs[0].symbol_count;
    y.antenna_index = k;
    y.samples.assign(len, cplx(0.0, 0.0));
    for (int n = 0; n < ch.n_antennas; ++n) {
      const cplx h = ch.at(k, n);
      const cplx* z = pa_outputs[n].samples.data();
      cplx* dst = y.samples.data();
      for (std::size_t t = 0; t < len; ++t) dst[t] += h * z[t];
    }
    if (noise_std > 0.0) {
      Rng rng(derive_seed(seed, "awgn", static_cast<std::uint64_t>(k)));
      for (auto& v : y.samples) v += noise_std * rng.cnormal();
    }
  }
  return out;
}

// Matched filter and symbol-rate decimation; the full cascade delay of
// taps-1 samples is absorbed so symbol m aligns with output m. The result
// is divided by gain_ref.
inline RxFrame receive(const AntennaWaveform& y, const RrcFilter& f, cplx gain_ref,
                       int user_index = 0) {
  if (!(std::abs(gain_ref) > 0.0)) fail("degenerate", "receive requires a nonzero gain_ref");
  const int n_sym = y.symbol_count;
  const int l = y.oversampling;
  const int n_taps = static_cast<int>(f.taps.size());
  if (l != f.oversampling)
    fail("dimension", "receive requires matching oversampling factors",
         {{"waveform", std::to_string(l)}, {"filter", std::to_string(f.oversampling)}});
  if (y.samples.size() < static_cast<std::size_t>(n_sym - 1) * l + n_taps)
    fail("dimension", "receive requires the full-convolution waveform length",
         {{"samples", std::to_string(y.samples.size())}});

  RxFrame rx;
  rx.user_index = user_index;
  rx.symbols.resize(n_sym);
  const cplx inv_gain = 1.0 / gain_ref;
  for (int m = 0; m < n_sym; ++m) {
    const cplx* seg = y.samples.data() + static_cast<std::size_t>(m) * l;
    cplx acc(0.0, 0.0);
    for (int j = 0; j < n_taps; ++j) acc += f.taps[j] * seg[j];
    rx.symbols[m] = acc * inv_gain;
  }
  return rx;
}

// Hard decisions against the Gray-labelled grid, counting bit errors
// against the reference labels.
inline BerCount detect_and_ber(const std::vector<cplx>& rx, const std::vector<int>& ref_labels) {
  if (rx.size() != ref_labels.size())
    fail("dimension", "detect_and_ber requires matched lengths",
         {{"rx", std::to_string(rx.size())}, {"ref", std::to_string(ref_labels.size())}});
  BerCount c;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    c.bit_errors += static_cast<std::uint64_t>(bit_diff4(qam16_demap(rx[i]), ref_labels[i]));
    c.bits += kBitsPerSymbol;
  }
  return c;
}

namespace detail {

struct GainFit {
  cplx gain{0.0, 0.0};
  double signal_power = 0.0;    // |g|^2 sum |tx|^2
  double residual_power = 0.0;  // sum |rx - g tx|^2
};

inline GainFit fit_gain(const std::vector<cplx>& rx, const std::vector<cplx>& tx) {
  if (rx.size() != tx.size())
    fail("dimension", "gain fit requires matched lengths",
         {{"rx", std::to_string(rx.size())}, {"tx", std::to_string(tx.size())}});
  double tx_power = 0.0;
  cplx cross(0.0, 0.0);
  for (std::size_t i = 0; i < rx.size(); ++i) {
    tx_power += std::norm(tx[i]);
    cross += std::conj(tx[i]) * rx[i];
  }
  if (!(tx_power > 0.0)) fail("degenerate", "gain fit requires nonzero reference energy");
  GainFit fit;
  fit.gain = cross / tx_power;
  fit.signal_power = std::norm(fit.gain) * tx_power;
  for (std::size_t i = 0; i < rx.size(); ++i)
    fit.residual_power += std::norm(rx[i] - fit.gain * tx[i]);
  return fit;
}

}  // namespace detail

// Least-squares complex gain fit; SINR is the fitted signal power over the
// residual power, capped at ceiling_db (returned exactly when the residual
// underflows a 10^-12 relative floor).
inline double sinr_estimate(const std::vector<cplx>& rx, const std::vector<cplx>& tx,
                            double ceiling_db = 60.0) {
  if (rx.size() < 100)
    fail("degenerate", "sinr_estimate requires at least 100 symbol pairs",
         {{"pairs", std::to_string(rx.size())}});
  const auto fit = detail::fit_gain(rx, tx);
  if (!(fit.signal_power > 0.0))
    fail("degenerate", "sinr_estimate requires a nonzero fitted signal");
  if (fit.residual_power <= fit.signal_power * 1e-12) return ceiling_db;
  return std::min(10.0 * std::log10(fit.signal_power / fit.residual_power), ceiling_db);
}

inline double evm_rms(const std::vector<cplx>& rx, const std::vector<cplx>& tx) {
  const auto fit = detail::fit_gain(rx, tx);
  if (!(fit.signal_power > 0.0)) fail("degenerate", "evm_rms requires a nonzero fitted signal");
  return std::sqrt(fit.residual_power / fit.signal_power);
}

// Pooled symbol-rate signal-to-MUI ratio of precoded frames before pulse
// shaping: sum_k |alpha s_k|^2 over sum_k |(H x)_k - alpha s_k|^2, pooled
// across frames. alphas holds one entry per frame, or a single broadcast
// value.
inline double mui_ratio_db(const MuChannel& ch, const std::vector<PrecodedFrame>& precoded,
                           const std::vector<SymbolFrame>& frames,
                           const std::vector<double>& alphas) {
  if (precoded.size() != frames.size() || precoded.empty())
    fail("dimension", "mui_ratio_db requires matched non-empty frame lists",
         {{"precoded", std::to_string(precoded.size())},
          {"frames", std::to_string(frames.size())}});
  if (alphas.size() != 1 && alphas.size() != frames.size())
    fail("dimension", "mui_ratio_db requires one alpha per frame or a single alpha",
         {{"alphas", std::to_string(alphas.size())}});

  double num = 0.0;
  double den = 0.0;
  for (std::size_t fidx = 0; fidx < frames.size(); ++fidx) {
    const double alpha = alphas.size() == 1 ? alphas[0] : alphas[fidx];
    const auto& s = frames[fidx].symbols;
    const auto& x = precoded[fidx].samples;
    if (static_cast<int>(s.size()) != ch.k_users ||
        static_cast<int>(x.size()) != ch.n_antennas)
      fail("dimension", "mui_ratio_db frame dimensions must match the channel");
    for (int k = 0; k < ch.k_users; ++k) {
      cplx acc(0.0, 0.0);
      for (int n = 0; n < ch.n_antennas; ++n) acc += ch.at(k, n) * x[n];
      num += std::norm(alpha * s[k]);
      den += std::norm(acc - alpha * s[k]);
    }
  }
  if (!(num > 0.0)) fail("degenerate", "mui_ratio_db requires nonzero signal energy");
  if (den <= num * 1e-30) return 300.0;
  return 10.0 * std::log10(num / den);
}

}  // namespace cesim
