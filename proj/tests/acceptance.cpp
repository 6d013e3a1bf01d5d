// Acceptance gate for the library: ten numbered end-to-end criteria, each
// printed as a single [PASS]/[FAIL] line with its measured quantities.
// Exit code 0 iff every criterion passes.  All tolerances are pinned here.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "bdpp/bergman.hpp"
#include "bdpp/dpp.hpp"
#include "bdpp/energy.hpp"
#include "bdpp/geometry.hpp"
#include "bdpp/harness.hpp"
#include "bdpp/operators.hpp"
#include "bdpp/special.hpp"
#include "bdpp/weights.hpp"

using namespace bdpp;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

int g_failures = 0;

void line(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s  (%s)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    auto [o, d] = body();
    ok = o;
    detail = std::move(d);
  } catch (const std::exception& e) {
    detail = fmt("exception: %s", e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  line(id, name, ok, detail + fmt(", %.1fs", secs));
}

int hardware_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc, 1u, 8u));
}

CVec point1(double re, double im = 0.0) {
  CVec z(1);
  z(0) = Complex(re, im);
  return z;
}

// Five compactly supported perturbations spread over the unit disk, with
// both signs of amplitude.  Shared by the trace and inverse-kernel gates.
std::vector<TestFunction> bump_corpus() {
  const std::vector<Complex> centers = {
      {0.0, 0.0}, {0.3, 0.0}, {-0.2, 0.25}, {0.0, 0.35}, {-0.3, -0.3}};
  const std::vector<double> radii = {0.5, 0.4, 0.3, 0.45, 0.35};
  const std::vector<double> amps = {0.3, -0.2, 0.15, 0.25, -0.1};
  std::vector<TestFunction> out;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    CVec c(1);
    c(0) = centers[i];
    out.push_back(TestFunction::bump(c, radii[i], amps[i]));
  }
  return out;
}

std::vector<PointConfiguration> draw_samples(const TruncatedBasis& basis, int count,
                                             std::uint64_t seed, int threads) {
  std::vector<PointConfiguration> out(static_cast<std::size_t>(count));
  const DppSampler sampler(basis);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
      out[static_cast<std::size_t>(i)] =
          sampler.sample(seed, static_cast<std::uint64_t>(i));
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

} // namespace

int main() {
  const auto grid_d = std::make_shared<const QuadratureGrid>(
      build_quadrature(DomainSpec::disk(1.0), {48, 96}));
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const double pi = std::numbers::pi;

  // 1. Closed-form norms for the radial weight on the unit disk, the
  //    reproducing value at the center, and the scaled density at 0.
  run(1, "closed_form_norms_and_density", [&]() -> std::pair<bool, std::string> {
    double worst_rel = 0.0;
    for (const double k : {1.0, 2.0, 4.0, 8.0}) {
      const CMat G = gram_matrix(*grid_d, k, phi, 20);
      for (int a = 0; a <= 20; ++a) {
        const double exact =
            pi * lower_incomplete_gamma(a + 1.0, k) / std::pow(k, a + 1.0);
        worst_rel = std::max(worst_rel, std::abs(G(a, a).real() - exact) / exact);
      }
    }
    const TruncatedBasis b1 = build_basis(grid_d, 1.0, phi, 13);
    const double k00 = kernel_eval(b1, point1(0.0), point1(0.0)).real();
    const double k00_exact = 1.0 / (pi * lower_incomplete_gamma(1.0, 1.0));
    const double k00_rel = std::abs(k00 - k00_exact) / k00_exact;

    const TruncatedBasis b8 = build_basis(grid_d, 8.0, phi, 34);
    const double scaled = bergman_density(b8, point1(0.0)) / 8.0;
    const double ref_gap = std::abs(scaled - 0.318417);
    const double limit_gap = std::abs(scaled - 1.0 / pi);

    const bool ok = worst_rel <= 1e-9 && k00_rel <= 1e-9 && ref_gap <= 1e-6 &&
                    limit_gap <= 4e-4;
    return {ok, fmt("norm_rel=%.2e k00_rel=%.2e density=%.6f ref_gap=%.2e limit_gap=%.2e",
                    worst_rel, k00_rel, scaled, ref_gap, limit_gap)};
  });

  // 2. Compressed-multiplication trace equals the density-weighted integral
  //    of the symbol for every corpus bump at two scales.
  run(2, "toeplitz_trace_identity", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (const double k : {2.0, 4.0}) {
      const int D = (k == 2.0) ? 16 : 22;
      const TruncatedBasis basis = build_basis(grid_d, k, phi, D);
      for (const TestFunction& g : bump_corpus()) {
        const Symbol sym = Symbol::plain(g);
        const double lhs = trace_toeplitz(toeplitz_matrix(basis, sym));
        const double rhs = trace_formula_rhs(basis, sym);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
      }
    }
    return {worst <= 1e-7, fmt("worst_rel=%.2e tol=1e-7", worst)};
  });

  // 3. Fredholm determinant from the matrix equals the nested-integral
  //    series at ranks 1, 2, 3.
  run(3, "determinant_series_oracle", [&]() -> std::pair<bool, std::string> {
    const auto grid_s = std::make_shared<const QuadratureGrid>(
        build_quadrature(DomainSpec::disk(1.0), {16, 32}));
    CVec c0 = CVec::Zero(1);
    const TestFunction g = TestFunction::bump(c0, 0.6, 0.3);
    double worst = 0.0;
    int max_rank = 0;
    for (const int D : {0, 1, 2}) {
      const TruncatedBasis basis = build_basis(grid_s, 1.0, phi, D);
      max_rank = std::max(max_rank, basis.dim());
      for (const Symbol& sym : {Symbol::plain(g), Symbol::exp_minus_one(g, 1.0)}) {
        const double det_matrix = std::exp(log_fredholm_det(toeplitz_matrix(basis, sym)));
        const double det_series = std::exp(fredholm_det_series(basis, sym));
        worst = std::max(worst, std::abs(det_matrix - det_series));
      }
    }
    return {worst <= 1e-8 && max_rank == 3, fmt("worst_abs=%.2e ranks<=%d tol=1e-8",
                                                worst, max_rank)};
  });

  // 4. Sampled Laplace functional agrees with the determinant formula.
  run(4, "laplace_functional_mc", [&]() -> std::pair<bool, std::string> {
    const TruncatedBasis basis = build_basis(grid_d, 3.0, phi, 12);
    CVec c0 = CVec::Zero(1);
    const TestFunction u = TestFunction::bump(c0, 0.5, 0.08);
    const double det =
        std::exp(log_fredholm_det(toeplitz_matrix(basis, Symbol::exp_minus_one(u, 3.0))));
    const McEstimate mc =
        estimate_laplace_functional(basis, u, 3.0, 10000, 2024, hardware_threads());
    const double z = std::abs(mc.mean - det) / mc.stderr_;
    const bool ok = z <= 3.0 && mc.stderr_ <= 0.01 * std::abs(mc.mean);
    return {ok, fmt("mean=%.6f det=%.6f z=%.2f stderr/mean=%.2e", mc.mean, det, z,
                    mc.stderr_ / std::abs(mc.mean))};
  });

  // 5. Finite-difference derivative of log det(I + M(t)) matches the trace
  //    formula on the exponential-symbol path, with second-order decay.
  run(5, "logdet_derivative_identity", [&]() -> std::pair<bool, std::string> {
    const TruncatedBasis basis = build_basis(grid_d, 4.0, phi, 22);
    CVec c0 = CVec::Zero(1);
    const TestFunction u = TestFunction::bump(c0, 0.55, 1.0);
    const auto path = [&](double t) {
      return toeplitz_matrix(basis, Symbol::exp_minus_one(u, 4.0 * t)).M;
    };
    double worst_err = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    bool agree = true;
    for (const double t : {0.25, 0.5, 0.75}) {
      const DerivativeCheck c1 = logdet_derivative_check(path, t, 1e-4);
      const DerivativeCheck c2 = logdet_derivative_check(path, t, 5e-5);
      const double e1 = std::abs(c1.fd - c1.trace);
      const double e2 = std::abs(c2.fd - c2.trace);
      agree = agree && e1 <= 1e-6 * (1.0 + std::abs(c1.trace));
      worst_err = std::max(worst_err, e1);
      const double ratio = (e2 > 0.0) ? e1 / e2 : std::numeric_limits<double>::infinity();
      worst_ratio = std::min(worst_ratio, ratio);
    }
    const bool ok = agree && worst_ratio >= 2.0;
    return {ok, fmt("worst_err=%.2e min_halving_ratio=%.2f", worst_err, worst_ratio)};
  });

  // 6. Inverse-kernel identity: solving with the compressed multiplier
  //    reproduces the shifted-weight kernel; refining the degree must not
  //    make it worse.  Both kernels live in the same degree-D space over the
  //    same nodes, so the true residual vanishes at every D and the measured
  //    one is rounding noise; the decrease clause therefore only binds while
  //    a residual sits above a pinned roundoff floor.
  run(6, "inverse_kernel_identity", [&]() -> std::pair<bool, std::string> {
    const double k = 4.0;
    const double floor = 1e-12;
    auto corpus_residual = [&](int D) {
      const TruncatedBasis basis = build_basis(grid_d, k, phi, D);
      double worst = 0.0;
      for (const TestFunction& u : bump_corpus()) {
        const TruncatedBasis shifted = build_basis(grid_d, k, shifted_weight(phi, u, 1.0), D);
        worst = std::max(worst, toeplitz_inverse_kernel_residual(basis, shifted, u, k));
      }
      return worst;
    };
    const double r20 = corpus_residual(20);
    const double r30 = corpus_residual(30);
    const bool ok = r20 <= 1e-6 && (r30 < r20 || r30 <= floor);
    return {ok, fmt("residual_D20=%.2e residual_D30=%.2e tol=1e-6 floor=1e-12", r20, r30)};
  });

  // 7. The claimed derivative of the energy is its actual derivative, and
  //    integrating it over [0,1] recovers the energy.
  run(7, "energy_primitive", [&]() -> std::pair<bool, std::string> {
    std::vector<double> ts(11);
    for (int i = 0; i <= 10; ++i) ts[static_cast<std::size_t>(i)] = 0.05 + 0.09 * i;

    const TestFunction u1 = TestFunction::bump(point1(0.25), 0.35, 0.05);
    const DomainSpec box2 = DomainSpec::box({{-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}});
    const QuadratureGrid grid_b = build_quadrature(box2, {10, 10, 10, 10});
    const WeightFunction phi2 = WeightFunction::quadratic_diagonal({1.0, 1.5});
    CVec c2(2);
    c2 << Complex(0.1, 0.0), Complex(-0.05, 0.05);
    const TestFunction u2 = TestFunction::bump(c2, 0.3, 0.012);

    const double r1 = energy_primitive_residual(phi, u1, ts, 2e-4, *grid_d);
    const double r2 = energy_primitive_residual(phi2, u2, ts, 2e-4, grid_b);

    const auto [gx, gw] = gauss_legendre(16);
    auto ft_gap = [&](const WeightFunction& w, const TestFunction& u,
                      const QuadratureGrid& g) {
      double integral = 0.0;
      for (int i = 0; i < 16; ++i)
        integral += 0.5 * gw(i) * ma_energy_derivative(w, u, 0.5 * (1.0 + gx(i)), g);
      const double energy = ma_energy(w, u, g).energy;
      return std::abs(integral - energy) / std::abs(energy);
    };
    const double ft1 = ft_gap(phi, u1, *grid_d);
    const double ft2 = ft_gap(phi2, u2, grid_b);

    const bool ok = r1 <= 1e-6 && r2 <= 1e-6 && ft1 <= 1e-8 && ft2 <= 1e-8;
    return {ok, fmt("fd_residual_n1=%.2e fd_residual_n2=%.2e ft_rel_n1=%.2e ft_rel_n2=%.2e",
                    r1, r2, ft1, ft2)};
  });

  // 8 and 10 share the default-config convergence run.
  const ExperimentConfig cfg = parse_config(default_config_json());
  ConvergenceReport rep1;

  // 8. Normalized log Laplace functional approaches minus the energy, with
  //    certified truncation at every scale.
  run(8, "convergence_to_energy", [&]() -> std::pair<bool, std::string> {
    rep1 = run_convergence_experiment(cfg, 1);
    if (rep1.rows.size() != 4) return {false, "expected 4 rows"};
    bool ok = rep1.all_valid();
    std::string gaps;
    for (std::size_t i = 0; i < rep1.rows.size(); ++i) {
      const ConvergenceRow& r = rep1.rows[i];
      ok = ok && r.tail_indicator <= 1e-8;
      if (i > 0) ok = ok && std::abs(r.gap) < std::abs(rep1.rows[i - 1].gap);
      gaps += fmt("%s|gap(%g)|=%.3e", i ? " " : "", r.k, std::abs(r.gap));
    }
    ok = ok && std::abs(rep1.rows[3].gap) <= 0.25 * std::abs(rep1.rows[0].gap);
    return {ok, gaps};
  });

  // 9. The sampler realizes the projection process: unit spectrum, fixed
  //    cardinality, and the empirical one-point intensity.
  run(9, "projection_dpp_sampler", [&]() -> std::pair<bool, std::string> {
    const TruncatedBasis basis = build_basis(grid_d, 2.0, phi, 16);

    CVec sq(grid_d->num_nodes());
    for (int i = 0; i < grid_d->num_nodes(); ++i) {
      const CVec z = grid_d->node(i);
      sq(i) = std::sqrt(grid_d->weights(i) * std::exp(-basis.k * phi.eval(z)));
    }
    const CMat A = sq.asDiagonal() * basis_matrix(basis, grid_d->nodes);
    const CMat G = A.adjoint() * A;
    Eigen::SelfAdjointEigenSolver<CMat> es(G);
    const double spec_gap = (es.eigenvalues().array() - 1.0).abs().maxCoeff();

    bool counts_ok = true;
    for (int i = 0; i < 50; ++i) {
      const PointConfiguration pc = draw_samples(basis, 1, 555 + i, 1)[0];
      counts_ok = counts_ok && pc.size() == basis.dim();
      for (int p = 0; p < pc.size(); ++p)
        counts_ok = counts_ok && grid_d->domain.contains(pc.points.row(p).transpose());
    }

    const int n_samples = 10000;
    const auto samples = draw_samples(basis, n_samples, 777, hardware_threads());
    const IntensityHistogram h = empirical_intensity(samples, basis, 6, 1);
    double worst_bin = 0.0;
    for (int b = 0; b < 6; ++b) {
      const double expect = h.expected(b, 0) * n_samples;
      if (expect < 100.0) continue;
      worst_bin = std::max(worst_bin, std::abs(h.counts(b, 0) - expect) / expect);
    }
    const bool ok = spec_gap <= 1e-8 && counts_ok && worst_bin <= 0.05;
    return {ok, fmt("spectrum_gap=%.2e exact_counts=%s worst_bin_rel=%.3f", spec_gap,
                    counts_ok ? "yes" : "no", worst_bin)};
  });

  // 10. Re-running the same experiment with 8 worker threads reproduces the
  //     single-thread report byte for byte.
  run(10, "deterministic_reports", [&]() -> std::pair<bool, std::string> {
    if (rep1.rows.empty()) return {false, "no baseline report from criterion 8"};
    const ConvergenceReport rep8 = run_convergence_experiment(cfg, 8);
    const bool csv_eq = report_to_string(rep1, "csv") == report_to_string(rep8, "csv");
    const bool json_eq = report_to_string(rep1, "json") == report_to_string(rep8, "json");
    return {csv_eq && json_eq, fmt("csv_identical=%s json_identical=%s",
                                   csv_eq ? "yes" : "no", json_eq ? "yes" : "no")};
  });

  std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
