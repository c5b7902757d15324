#pragma once

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <vector>

#include "cesim/errors.hpp"
#include "cesim/rng.hpp"

namespace cesim {

using cplx = std::complex<double>;

enum class Alphabet { QAM16 };

inline constexpr int kBitsPerSymbol = 4;

namespace detail {

// Gray map per axis: bit pair 00,01,11,10 -> level -3,-1,+1,+3.
// Indexed by the pair value (b_hi<<1 | b_lo).
inline constexpr std::array<double, 4> kAxisLevel = {-3.0, -1.0, 3.0, 1.0};
// Inverse: ascending level index 0..3 (-3,-1,+1,+3) -> bit pair.
inline constexpr std::array<int, 4> kAxisBits = {0b00, 0b01, 0b11, 0b10};

inline constexpr double kQamScale = 0.31622776601683794;  // 1/sqrt(10)

inline int slice_axis(double v) {
  // Nearest level index among {-3,-1,+1,+3}/sqrt(10).
  const double t = v / kQamScale;
  if (t < -2.0) return 0;
  if (t < 0.0) return 1;
  if (t < 2.0) return 2;
  return 3;
}

}  // namespace detail

// Symbol index layout: bits [3:2] select the in-phase level, [1:0] the
// quadrature level, each Gray-coded. Unit average energy.
inline cplx qam16_point(int index) {
  const double re = detail::kAxisLevel[(index >> 2) & 3];
  const double im = detail::kAxisLevel[index & 3];
  return {re * detail::kQamScale, im * detail::kQamScale};
}

// Nearest-point decision (per-axis slicing is exact min-distance on the
// rectangular grid), returning the 4-bit Gray label.
inline int qam16_demap(cplx v) {
  const int i_idx = detail::slice_axis(v.real());
  const int q_idx = detail::slice_axis(v.imag());
  return (detail::kAxisBits[i_idx] << 2) | detail::kAxisBits[q_idx];
}

inline int bit_diff4(int a, int b) { return std::popcount(static_cast<unsigned>((a ^ b) & 0xf)); }

struct MuChannel {
  std::vector<cplx> entries;  // row-major, K rows by N_t columns
  int k_users = 0;
  int n_antennas = 0;

  cplx at(int k, int n) const { return entries[static_cast<std::size_t>(k) * n_antennas + n]; }
};

struct SymbolFrame {
  std::vector<cplx> symbols;  // length K
  Alphabet alphabet = Alphabet::QAM16;
};

struct PrecodedFrame {
  std::vector<cplx> samples;  // length N_t
  double sum_power_target = 0.0;
};

// I.i.d. Rayleigh entries, CN(0, 1).
inline MuChannel draw_channel(int k_users, int n_antennas, std::uint64_t seed) {
  if (k_users <= 0 || n_antennas <= 0)
    fail("dimension", "draw_channel requires positive dimensions",
         {{"k_users", std::to_string(k_users)}, {"n_antennas", std::to_string(n_antennas)}});
  MuChannel ch;
  ch.k_users = k_users;
  ch.n_antennas = n_antennas;
  ch.entries.resize(static_cast<std::size_t>(k_users) * n_antennas);
  Rng rng(seed);
  for (auto& h : ch.entries) h = rng.cnormal();
  return ch;
}

inline SymbolFrame draw_symbols(int k_users, Rng& rng) {
  if (k_users <= 0)
    fail("dimension", "draw_symbols requires k_users > 0",
         {{"k_users", std::to_string(k_users)}});
  SymbolFrame f;
  f.symbols.resize(k_users);
  for (auto& s : f.symbols) s = qam16_point(static_cast<int>(rng.uniform_index(16)));
  return f;
}

inline SymbolFrame draw_symbols(int k_users, std::uint64_t seed) {
  Rng rng(seed);
  return draw_symbols(k_users, rng);
}

inline std::vector<int> demap_frame(const std::vector<cplx>& symbols) {
  std::vector<int> labels(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) labels[i] = qam16_demap(symbols[i]);
  return labels;
}

}  // namespace cesim
