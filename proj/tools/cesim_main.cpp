#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cesim/cesim.hpp"

namespace {

cesim::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) cesim::fail("io", "cannot open config file", {{"path", path}});
  cesim::json j;
  try {
    in >> j;
  } catch (const cesim::json::exception& e) {
    cesim::fail("io", std::string("config is not valid JSON: ") + e.what(), {{"path", path}});
  }
  return cesim::config_from_json(j);
}

void print_error(const cesim::SimError& e) {
  cesim::json ctx = cesim::json::object();
  for (const auto& [k, v] : e.context()) ctx[k] = v;
  cesim::json out{{"error", {{"kind", e.kind()}, {"message", e.what()}, {"context", ctx}}}};
  std::cerr << out.dump() << std::endl;
}

int run_oracle(std::uint64_t seed, int instances) {
  using namespace cesim;
  // Gradient versus central finite differences.
  double worst_rel = 0.0;
  for (int i = 0; i < instances; ++i) {
    const MuChannel ch = draw_channel(4, 24, derive_seed(seed, "oracle-grad", i));
    Rng rng(derive_seed(seed, "oracle-grad-sym", i));
    const SymbolFrame frame = draw_symbols(4, rng);
    std::vector<double> th(24);
    for (auto& v : th) v = -3.0 + 6.0 * rng.uniform();
    const auto grad = ce_gradient(th, ch, frame, 1.5, 1.0);
    const double h = 1e-6;
    for (int n = 0; n < 24; ++n) {
      auto tp = th, tm = th;
      tp[n] += h;
      tm[n] -= h;
      const double fd =
          (ce_objective(tp, ch, frame, 1.5, 1.0) - ce_objective(tm, ch, frame, 1.5, 1.0)) /
          (2.0 * h);
      const double scale = std::max(1.0, std::abs(fd));
      worst_rel = std::max(worst_rel, std::abs(grad[n] - fd) / scale);
    }
  }

  // Optimizer versus the exhaustive grid oracle on small instances.
  int grid_checked = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < instances; ++i) {
    const MuChannel ch = draw_channel(1, 3, derive_seed(seed, "oracle-bf", i));
    Rng rng(derive_seed(seed, "oracle-bf-sym", i));
    const SymbolFrame frame = draw_symbols(1, rng);
    double habs = 0.0;
    for (int n = 0; n < 3; ++n) habs += std::abs(ch.at(0, n));
    const double q = std::sqrt(1.0 / 3.0);
    const double alpha = 3.0 * q * habs / std::abs(frame.symbols[0]);
    CeOptions opts;
    opts.n_passes = 3;
    opts.m_subiters = 20;
    opts.step_size = 0.8 / (alpha * std::abs(frame.symbols[0]) * q *
                            [&] {
                              double mx = 0.0;
                              for (int n = 0; n < 3; ++n)
                                mx = std::max(mx, std::abs(ch.at(0, n)));
                              return mx;
                            }());
    const CeSolution lms = ce_optimize(ch, frame, alpha, 1.0, opts);
    const CeSolution grid = ce_brute_force(ch, frame, alpha, 1.0, 64);
    worst_ratio = std::max(worst_ratio, lms.objective / grid.objective);
    ++grid_checked;
  }

  cesim::json out{{"gradient", {{"instances", instances}, {"worst_rel_err", worst_rel}}},
                  {"brute_force",
                   {{"instances", grid_checked},
                    {"worst_lms_over_grid", worst_ratio},
                    {"tolerance", 1.05}}},
                  {"pass", worst_rel < 1e-4 && worst_ratio <= 1.05}};
  std::cout << out.dump(2) << std::endl;
  return out["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant-envelope versus zero-forcing downlink link simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* copt = sub->add_option("--config", config_path, "experiment config JSON");
    if (need_config) copt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override master_seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--threads", threads, "worker threads over trials")
        ->check(CLI::PositiveNumber);
  };

  auto* sweep = app.add_subcommand("sweep", "run the full power sweep and write figure CSVs");
  add_common(sweep, true);
  auto* ccdf_cmd = app.add_subcommand("ccdf", "run only the PAPR CCDF measurement");
  add_common(ccdf_cmd, true);
  auto* oracle = app.add_subcommand("oracle", "run the built-in verification oracles");
  oracle->add_option("--seed", seed, "oracle seed")->each([&](const std::string&) {
    seed_set = true;
  });
  int oracle_instances = 25;
  oracle->add_option("--instances", oracle_instances, "instances per oracle")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed()) return run_oracle(seed_set ? seed : 1, oracle_instances);

    cesim::ExperimentConfig cfg = load_config(config_path);
    if (seed_set) cfg.master_seed = seed;
    const bool full = sweep->parsed();
    cesim::StudyOutput study = cesim::run_study(cfg, threads, full);
    cesim::json manifest = cesim::emit(study, out_dir);
    cesim::json summary{{"status", "ok"},
                        {"out_dir", out_dir},
                        {"outputs", manifest["outputs"]},
                        {"frames", manifest["frames"]}};
    std::cout << summary.dump(2) << std::endl;
    return 0;
  } catch (const cesim::SimError& e) {
    print_error(e);
    return 1;
  } catch (const std::exception& e) {
    cesim::json out{{"error", {{"kind", "internal"}, {"message", e.what()}}}};
    std::cerr << out.dump() << std::endl;
    return 1;
  }
}
