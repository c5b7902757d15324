#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "cesim/pa.hpp"
#include "test_util.hpp"

using namespace cesim;
using Catch::Approx;

namespace {

PaModel make_model(std::vector<cplx> coeffs, double clip_in) {
  PaModel m;
  m.coeffs = std::move(coeffs);
  m.clip_in = clip_in;
  return m;
}

AntennaWaveform make_wf(std::vector<cplx> samples) {
  AntennaWaveform wf;
  wf.samples = std::move(samples);
  wf.oversampling = 1;
  wf.symbol_count = static_cast<int>(wf.samples.size());
  return wf;
}

}  // namespace

TEST_CASE("fit_pa_bank is deterministic and perturbs per antenna") {
  PaFitSpec spec;
  const auto a = fit_pa_bank(spec, 8);
  const auto b = fit_pa_bank(spec, 8);
  REQUIRE(a.size() == 8u);
  for (std::size_t n = 0; n < a.size(); ++n) {
    REQUIRE(a[n].coeffs == b[n].coeffs);
    REQUIRE(a[n].clip_in == b[n].clip_in);
    REQUIRE(a[n].antenna_index == static_cast<int>(n));
  }
  // Jitter separates antennas but stays within a few percent.
  for (std::size_t n = 1; n < a.size(); ++n) {
    REQUIRE(a[n].coeffs != a[0].coeffs);
    REQUIRE(std::abs(a[n].coeffs[0].real() / a[0].coeffs[0].real() - 1.0) < 0.2);
  }
}

TEST_CASE("fit_pa_bank without perturbation reproduces the base fit") {
  PaFitSpec spec;
  spec.perturbation_rel = 0.0;
  const auto bank = fit_pa_bank(spec, 3);
  for (const auto& m : bank) {
    REQUIRE(m.coeffs == bank[0].coeffs);
    REQUIRE(m.clip_in == bank[0].clip_in);
  }
  // Known base fit for the default knee sharpness.
  REQUIRE(bank[0].coeffs[0].real() == Approx(0.99924).margin(5e-3));
  REQUIRE(bank[0].coeffs[2].real() == Approx(-0.33646).margin(2e-2));
  REQUIRE(std::abs(bank[0].coeffs[0].imag()) == 0.0);
}

TEST_CASE("near-hard saturation fits with near-unit small-signal gain") {
  PaFitSpec spec;
  spec.smoothness = 8.0;
  spec.perturbation_rel = 0.0;
  const auto bank = fit_pa_bank(spec, 1);
  REQUIRE(std::abs(std::abs(bank[0].coeffs[0]) - 1.0) <= 0.02);
}

TEST_CASE("fit quality gate rejects a non-polynomial reference") {
  std::vector<double> x(200), y(200);
  for (int i = 0; i < 200; ++i) {
    x[i] = 1.2 * (i + 1) / 200.0;
    y[i] = std::sin(20.0 * x[i]);
  }
  REQUIRE(test_util::error_kind([&] { detail::fit_odd_poly(x, y, 1.0); }) == "fit_quality");
}

TEST_CASE("clip point lies beyond the fit range at the first stationary point") {
  PaFitSpec spec;
  spec.perturbation_rel = 0.0;
  const auto bank = fit_pa_bank(spec, 1);
  const PaModel& m = bank[0];
  REQUIRE(m.clip_in > 1.2);
  REQUIRE(m.clip_in == Approx(1.361).margin(0.05));
  // Stationary: derivative of the AM/AM curve changes sign at clip_in.
  REQUIRE(detail::pa_gain_sq_slope(m, m.clip_in * 0.99) > 0.0);
  REQUIRE(detail::pa_gain_sq_slope(m, m.clip_in * 1.01) < 0.0);
  REQUIRE(detail::pa_gain_abs(m, m.clip_in) == Approx(0.9293).margin(0.02));
}

TEST_CASE("AM/AM curve is monotone below the clip point for the whole bank") {
  const auto bank = fit_pa_bank(PaFitSpec{}, 24);
  for (const auto& m : bank) {
    double prev = 0.0;
    for (int i = 1; i <= 200; ++i) {
      const double a = m.clip_in * i / 200.0;
      const double g = detail::pa_gain_abs(m, a);
      REQUIRE(g >= prev);
      prev = g;
    }
  }
}

TEST_CASE("compression_point_1db closed form for a cubic") {
  // g(A)/A = 1 - 0.1 A^2; 1 dB compression at sqrt((1 - 10^(-1/20)) / 0.1).
  const PaModel m = make_model({1.0, -0.1, 0.0, 0.0, 0.0}, 1.8257);
  const double expected = std::sqrt((1.0 - std::pow(10.0, -0.05)) / 0.1);
  REQUIRE(compression_point_1db(m) == Approx(expected).margin(1e-3));
  REQUIRE(expected == Approx(1.0427).margin(2e-3));
}

TEST_CASE("compression_point_1db rejects non-compressive models") {
  const PaModel linear = make_model({1.0, 0.0, 0.0, 0.0, 0.0}, 2.0);
  REQUIRE(test_util::error_kind([&] { compression_point_1db(linear); }) ==
          "not_compressive");
}

TEST_CASE("default bank compression point matches the reference curve") {
  PaFitSpec spec;
  spec.perturbation_rel = 0.0;
  const auto bank = fit_pa_bank(spec, 1);
  // Closed form for the smooth saturating reference with p = 2: 0.8746.
  REQUIRE(compression_point_1db(bank[0]) == Approx(0.8746).margin(0.025));
}

TEST_CASE("pa_apply is identity for a unit linear model") {
  const PaModel m = make_model({1.0, 0.0, 0.0, 0.0, 0.0}, 1e9);
  const AntennaWaveform in = make_wf({{0.3, 0.4}, {-1.2, 0.1}, {0.0, 0.0}});
  const AntennaWaveform out = pa_apply(m, in);
  for (std::size_t i = 0; i < in.samples.size(); ++i)
    REQUIRE(std::abs(out.samples[i] - in.samples[i]) < 1e-12);
}

TEST_CASE("pa_apply compresses magnitude and preserves phase") {
  const PaModel m = make_model({1.0, -0.1, 0.0, 0.0, 0.0}, 1.8257);
  const cplx x = std::polar(1.0, 0.7);
  const AntennaWaveform out = pa_apply(m, make_wf({x}));
  REQUIRE(std::abs(out.samples[0]) == Approx(0.9).epsilon(1e-12));
  REQUIRE(std::arg(out.samples[0]) == Approx(0.7).margin(1e-12));
}

TEST_CASE("pa_apply freezes the output above clip_in") {
  const PaModel m = make_model({1.0, -0.1, 0.0, 0.0, 0.0}, 1.8257);
  const double g_clip = detail::pa_gain_abs(m, m.clip_in);
  const AntennaWaveform out =
      pa_apply(m, make_wf({std::polar(2.0 * m.clip_in, -1.3), std::polar(10.0, 0.2)}));
  REQUIRE(std::abs(out.samples[0]) == Approx(g_clip).epsilon(1e-12));
  REQUIRE(std::abs(out.samples[1]) == Approx(g_clip).epsilon(1e-12));
  REQUIRE(std::arg(out.samples[0]) == Approx(-1.3).margin(1e-12));
}

TEST_CASE("pa_apply commutes with sample permutation") {
  const auto bank = fit_pa_bank(PaFitSpec{}, 1);
  Rng rng(derive_seed(61, "pa-perm"));
  std::vector<cplx> s(32);
  for (auto& v : s) v = rng.cnormal();
  const AntennaWaveform fwd = pa_apply(bank[0], make_wf(s));
  std::vector<cplx> rev(s.rbegin(), s.rend());
  const AntennaWaveform bwd = pa_apply(bank[0], make_wf(rev));
  for (std::size_t i = 0; i < s.size(); ++i)
    REQUIRE(bwd.samples[i] == fwd.samples[s.size() - 1 - i]);
}

TEST_CASE("drive_at_power scales to the target rms and reports back-off") {
  PaFitSpec spec;
  spec.perturbation_rel = 0.0;
  const auto bank = fit_pa_bank(spec, 1);
  const double a1db = compression_point_1db(bank[0]);

  const AntennaWaveform wf = make_wf({{0.5, 0.0}, {0.0, -0.5}, {0.5, 0.0}, {0.0, 0.5}});
  const DriveResult at_a1 = drive_at_power(wf, bank[0], a1db);
  REQUIRE(at_a1.backoff_db == Approx(0.0).margin(1e-9));
  REQUIRE(at_a1.scale == Approx(a1db / 0.5).epsilon(1e-12));
  double p = 0.0;
  for (const auto& v : at_a1.waveform.samples) p += std::norm(v);
  REQUIRE(std::sqrt(p / 4.0) == Approx(a1db).epsilon(1e-12));

  const DriveResult backed = drive_at_power(wf, bank[0], a1db / 2.0);
  REQUIRE(backed.backoff_db == Approx(20.0 * std::log10(2.0)).margin(1e-9));
}

TEST_CASE("drive_at_power rejects degenerate inputs") {
  const auto bank = fit_pa_bank(PaFitSpec{}, 1);
  const AntennaWaveform zero = make_wf({{0.0, 0.0}, {0.0, 0.0}});
  REQUIRE(test_util::error_kind([&] { drive_at_power(zero, bank[0], 1.0); }) ==
          "degenerate");
  const AntennaWaveform ok = make_wf({{1.0, 0.0}});
  REQUIRE(test_util::error_kind([&] { drive_at_power(ok, bank[0], 0.0); }) == "config");
}

TEST_CASE("pa bank round-trips through JSON exactly") {
  const auto bank = fit_pa_bank(PaFitSpec{}, 6);
  const auto back = bank_from_json(bank_to_json(bank));
  REQUIRE(back.size() == bank.size());
  for (std::size_t n = 0; n < bank.size(); ++n) {
    REQUIRE(back[n].coeffs == bank[n].coeffs);
    REQUIRE(back[n].clip_in == bank[n].clip_in);
    REQUIRE(back[n].antenna_index == bank[n].antenna_index);
  }
}

TEST_CASE("pa fit spec validation") {
  PaFitSpec bad;
  bad.perturbation_rel = 0.2;
  REQUIRE(test_util::error_kind([&] { fit_pa_bank(bad, 2); }) == "config");
  PaFitSpec neg;
  neg.smoothness = 0.0;
  REQUIRE(test_util::error_kind([&] { fit_pa_bank(neg, 2); }) == "config");
  REQUIRE(test_util::error_kind([&] { fit_pa_bank(PaFitSpec{}, 0); }) == "dimension");
}
