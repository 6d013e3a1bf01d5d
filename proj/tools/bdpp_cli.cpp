#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bdpp/bergman.hpp"
#include "bdpp/dpp.hpp"
#include "bdpp/geometry.hpp"
#include "bdpp/harness.hpp"

namespace {

bdpp::ExperimentConfig config_from(const std::string& path) {
  if (path.empty()) return bdpp::parse_config(bdpp::default_config_json());
  return bdpp::load_config(path);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_converge(bdpp::ExperimentConfig cfg, int threads) {
  const bdpp::ConvergenceReport rep = bdpp::run_convergence_experiment(cfg, threads);
  std::ofstream out(cfg.out_path);
  if (!out) {
    std::cerr << "cannot open " << cfg.out_path << " for writing\n";
    return 2;
  }
  bdpp::emit_report(rep, out, cfg.format);
  for (const auto& r : rep.rows)
    std::cout << "k=" << r.k << " D=" << r.D << " N=" << r.N_D << " lhs=" << fmt17(r.lhs)
              << " rhs=" << fmt17(r.rhs) << " gap=" << fmt17(r.gap)
              << " tail=" << fmt17(r.tail_indicator) << " deriv=" << fmt17(r.deriv_residual)
              << (r.valid ? " valid" : " INVALID") << '\n';
  std::cout << "report written to " << cfg.out_path << " (" << cfg.format << ")\n";
  if (!rep.all_valid()) {
    std::cout << "some rows failed their certification thresholds\n";
    return 1;
  }
  return 0;
}

int run_identities(const bdpp::ExperimentConfig& cfg, const std::string& out_path, int threads) {
  const bdpp::IdentityReport rep = bdpp::run_identity_suite(cfg, {}, threads);
  bdpp::emit_identity_report(rep, std::cout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot open " << out_path << " for writing\n";
      return 2;
    }
    bdpp::emit_identity_report(rep, out);
  }
  return rep.all_passed() ? 0 : 1;
}

int run_sample(const bdpp::ExperimentConfig& cfg, const std::string& out_arg, int threads) {
  const double k = cfg.k_schedule.front();
  const int D = bdpp::schedule_degree(cfg, k);
  const auto grid = std::make_shared<const bdpp::QuadratureGrid>(
      bdpp::build_quadrature(cfg.domain, bdpp::schedule_resolution(cfg, D)));
  const bdpp::TruncatedBasis basis = bdpp::build_basis(grid, k, cfg.weight, D);
  const bdpp::DppSampler sampler(basis);

  const int n_samples = cfg.mc_samples;
  std::vector<bdpp::PointConfiguration> samples(static_cast<std::size_t>(n_samples));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_samples) return;
      samples[static_cast<std::size_t>(i)] =
          sampler.sample(cfg.seed, static_cast<std::uint64_t>(i));
    }
  };
  {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, threads); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const std::string path = out_arg.empty() ? "samples.csv" : out_arg;
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot open " << path << " for writing\n";
    return 2;
  }
  out << "sample_index,point_index";
  for (int j = 0; j < cfg.domain.n; ++j) out << ",re" << (j + 1) << ",im" << (j + 1);
  out << '\n';
  for (int i = 0; i < n_samples; ++i) {
    const auto& pts = samples[static_cast<std::size_t>(i)].points;
    for (int p = 0; p < pts.rows(); ++p) {
      out << i << ',' << p;
      for (int j = 0; j < cfg.domain.n; ++j)
        out << ',' << fmt17(pts(p, j).real()) << ',' << fmt17(pts(p, j).imag());
      out << '\n';
    }
  }
  std::cout << "wrote " << n_samples << " samples of " << basis.dim() << " points (k=" << k
            << ", D=" << D << ") to " << path << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Bergman point process harness"};
  app.require_subcommand(1);

  std::string config_path, out_path, format;
  std::uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool with_format) {
    sub->add_option("--config", config_path, "JSON experiment config (default: built-in disk experiment)");
    sub->add_option("--out", out_path, "output file path");
    if (with_format)
      sub->add_option("--format", format, "report format")
          ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "override the config's random seed");
    sub->add_option("--threads", threads, "worker threads (results are thread-count independent)")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* conv = app.add_subcommand(
      "converge", "run the scaled log-determinant vs energy convergence experiment");
  add_common(conv, true);
  CLI::App* iden = app.add_subcommand(
      "identities", "run the full identity check suite on canonical fixtures");
  add_common(iden, false);
  CLI::App* samp = app.add_subcommand(
      "sample", "draw point process samples at the first scheduled k and write them as CSV");
  add_common(samp, false);

  CLI11_PARSE(app, argc, argv);

  try {
    bdpp::ExperimentConfig cfg = config_from(config_path);
    const CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) cfg.seed = seed;
    if (active == conv) {
      if (!out_path.empty()) cfg.out_path = out_path;
      if (!format.empty()) cfg.format = format;
      return run_converge(cfg, threads);
    }
    if (active == iden) return run_identities(cfg, out_path, threads);
    return run_sample(cfg, out_path, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
