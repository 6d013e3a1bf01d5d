#include "bdpp/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bdpp/bergman.hpp"
#include "bdpp/dpp.hpp"
#include "bdpp/energy.hpp"
#include "bdpp/operators.hpp"
#include "bdpp/reduction.hpp"
#include "bdpp/special.hpp"

namespace bdpp {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) bad_config("unknown field \"" + it.key() + "\" in " + where);
  }
}

CVec parse_point(const json& j, int n, const std::string& where) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(2 * n))
    bad_config(where + " must be an array of " + std::to_string(2 * n) + " reals");
  CVec z(n);
  for (int i = 0; i < n; ++i)
    z(i) = Complex(j[2 * i].get<double>(), j[2 * i + 1].get<double>());
  return z;
}

DomainSpec parse_domain(const json& j) {
  if (!j.is_object()) bad_config("domain must be an object");
  const std::string kind = j.value("kind", "");
  if (kind == "disk") {
    check_keys(j, "domain", {"kind", "radius", "center"});
    Complex c(0, 0);
    if (j.contains("center")) {
      const CVec z = parse_point(j.at("center"), 1, "domain.center");
      c = z(0);
    }
    return DomainSpec::disk(j.value("radius", 1.0), c);
  }
  if (kind == "bidisk") {
    check_keys(j, "domain", {"kind", "r1", "r2"});
    return DomainSpec::bidisk(j.value("r1", 1.0), j.value("r2", 1.0));
  }
  if (kind == "box") {
    check_keys(j, "domain", {"kind", "intervals"});
    if (!j.contains("intervals")) bad_config("domain.intervals is required for boxes");
    std::vector<std::array<double, 2>> iv;
    for (const auto& e : j.at("intervals")) {
      if (!e.is_array() || e.size() != 2) bad_config("domain.intervals entries must be [lo, hi]");
      iv.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return DomainSpec::box(iv);
  }
  bad_config("domain.kind must be one of disk, bidisk, box");
}

WeightFunction parse_weight(const json& j, int n) {
  if (!j.is_object()) bad_config("weight must be an object");
  const std::string kind = j.value("kind", "");
  if (kind == "quadratic") {
    check_keys(j, "weight", {"kind", "c"});
    return WeightFunction::quadratic(j.value("c", 1.0), n);
  }
  if (kind == "quadratic_diagonal") {
    check_keys(j, "weight", {"kind", "cs"});
    std::vector<double> cs;
    for (const auto& e : j.at("cs")) cs.push_back(e.get<double>());
    if (static_cast<int>(cs.size()) != n) bad_config("weight.cs must have one entry per variable");
    return WeightFunction::quadratic_diagonal(cs);
  }
  bad_config("weight.kind must be quadratic or quadratic_diagonal");
}

TestFunction parse_test_function(const json& j, int n) {
  if (!j.is_object()) bad_config("test_function must be an object");
  const std::string kind = j.value("kind", "");
  if (kind == "zero") {
    check_keys(j, "test_function", {"kind"});
    return TestFunction::zero(n);
  }
  if (kind == "bump") {
    check_keys(j, "test_function", {"kind", "center", "radius", "amplitude"});
    const CVec c = parse_point(j.at("center"), n, "test_function.center");
    return TestFunction::bump(c, j.value("radius", 0.5), j.value("amplitude", 0.1));
  }
  bad_config("test_function.kind must be bump or zero");
}

std::vector<int> default_box_resolution(const DomainSpec& d) {
  return std::vector<int>(static_cast<std::size_t>(2 * d.n), 16);
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    bad_config(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("top level must be an object");
  check_keys(j, "top level",
             {"schema", "domain", "weight", "test_function", "k_schedule", "degree", "grid",
              "mc", "output"});
  if (!j.contains("schema") || !j.at("schema").is_number_integer() ||
      j.at("schema").get<int>() != 1)
    bad_config("schema must be the integer 1");
  for (const char* req : {"domain", "weight", "test_function", "k_schedule"})
    if (!j.contains(req)) bad_config(std::string("missing required field \"") + req + "\"");

  ExperimentConfig cfg;
  cfg.domain = parse_domain(j.at("domain"));
  cfg.weight = parse_weight(j.at("weight"), cfg.domain.n);
  cfg.u = parse_test_function(j.at("test_function"), cfg.domain.n);

  for (const auto& e : j.at("k_schedule")) {
    const double k = e.get<double>();
    if (!(k > 0.0)) bad_config("k_schedule entries must be positive");
    cfg.k_schedule.push_back(k);
  }
  if (cfg.k_schedule.empty()) bad_config("k_schedule must not be empty");
  for (std::size_t i = 1; i < cfg.k_schedule.size(); ++i)
    if (cfg.k_schedule[i] <= cfg.k_schedule[i - 1])
      bad_config("k_schedule must be strictly increasing");

  if (j.contains("degree")) {
    const json& d = j.at("degree");
    check_keys(d, "degree", {"c", "override"});
    cfg.degree_c = d.value("c", 3.0);
    if (!(cfg.degree_c > 0.0)) bad_config("degree.c must be positive");
    if (d.contains("override"))
      for (auto it = d.at("override").begin(); it != d.at("override").end(); ++it) {
        const double k = std::stod(it.key());
        const int D = it.value().get<int>();
        if (D < 0) bad_config("degree.override values must be >= 0");
        cfg.degree_override.emplace_back(k, D);
      }
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, "grid", {"radial", "angular", "per_axis"});
    cfg.grid_radial = g.value("radial", 96);
    cfg.grid_angular = g.value("angular", 0);
    if (g.contains("per_axis"))
      for (const auto& e : g.at("per_axis")) cfg.grid_box.push_back(e.get<int>());
  }
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    check_keys(m, "mc", {"enabled", "n_samples", "seed"});
    cfg.mc_enabled = m.value("enabled", true);
    cfg.mc_samples = m.value("n_samples", 10000);
    cfg.seed = m.value("seed", static_cast<std::uint64_t>(12345));
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"path", "format"});
    cfg.out_path = o.value("path", "report.csv");
    cfg.format = o.value("format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
      bad_config("output.format must be csv or json");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_json() {
  return R"({
  "schema": 1,
  "domain": {"kind": "disk", "radius": 1.0, "center": [0.0, 0.0]},
  "weight": {"kind": "quadratic", "c": 1.0},
  "test_function": {"kind": "bump", "center": [0.0, 0.0], "radius": 0.7, "amplitude": 0.08},
  "k_schedule": [4.0, 8.0, 16.0, 32.0],
  "degree": {"c": 3.0, "override": {"4": 44, "8": 48}},
  "grid": {"radial": 96, "angular": 0},
  "mc": {"enabled": true, "n_samples": 10000, "seed": 12345},
  "output": {"path": "report.csv", "format": "csv"}
})";
}

bool ConvergenceReport::all_valid() const {
  for (const auto& r : rows)
    if (!r.valid) return false;
  return !rows.empty();
}

bool IdentityReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.skipped && !c.passed) return false;
  return !checks.empty();
}

int schedule_degree(const ExperimentConfig& cfg, double k) {
  for (const auto& [ko, Do] : cfg.degree_override)
    if (ko == k) return Do;
  return degree_for_scale(k, cfg.domain.circumradius(), cfg.degree_c);
}

std::vector<int> schedule_resolution(const ExperimentConfig& cfg, int D) {
  switch (cfg.domain.kind) {
    case DomainKind::disk:
    case DomainKind::bidisk: {
      const int radial = std::max({8, cfg.grid_radial, D + 1});
      const int angular = std::max({8, cfg.grid_angular, 2 * D + 2});
      return {radial, angular};
    }
    case DomainKind::box: {
      std::vector<int> base =
          cfg.grid_box.empty() ? default_box_resolution(cfg.domain) : cfg.grid_box;
      if (base.size() != static_cast<std::size_t>(2 * cfg.domain.n))
        bad_config("grid.per_axis must have one entry per real axis");
      for (int& m : base) m = std::max({8, m, D + 1});
      return base;
    }
  }
  throw std::logic_error("schedule_resolution: unreachable");
}

namespace {

constexpr double kDerivT[] = {0.1, 0.3, 0.5, 0.7, 0.9};
constexpr double kDerivH = 1e-3;

ConvergenceRow compute_row(const ExperimentConfig& cfg, double k) {
  ConvergenceRow row;
  row.k = k;
  row.D = schedule_degree(cfg, k);
  const auto grid = std::make_shared<const QuadratureGrid>(
      build_quadrature(cfg.domain, schedule_resolution(cfg, row.D)));
  const TruncatedBasis basis = build_basis(grid, k, cfg.weight, row.D);
  row.N_D = basis.dim();

  if (cfg.u.is_zero()) {
    row.tail_indicator = truncation_tail_indicator(basis);
    row.lhs = row.rhs = row.gap = row.deriv_residual = 0.0;
    row.valid = row.tail_indicator <= kTailTolerance;
    return row;
  }

  // Certify truncation on a neighborhood of the support of u; that is where
  // every integrand of the experiment lives.
  row.tail_indicator =
      truncation_tail_indicator(basis, Region{cfg.u.center, 1.1 * cfg.u.radius});

  const int n = cfg.domain.n;
  const double kpow = std::pow(k, n + 1);
  const ToeplitzMatrix T = toeplitz_matrix(basis, Symbol::exp_minus_one(cfg.u, k));
  row.lhs = log_fredholm_det(T) / kpow;
  row.rhs = -ma_energy(cfg.weight, cfg.u, *grid).energy;
  row.gap = row.lhs - row.rhs;

  // Derivative identity along t -> e^{-k t u}: the t-derivative of the
  // scaled log-determinant must match minus the u-mass of the one-point
  // density at the shifted weight.
  bool deriv_ok = true;
  double worst = 0.0;
  for (const double t : kDerivT) {
    const double lp =
        log_fredholm_det(toeplitz_matrix(basis, Symbol::exp_minus_one(cfg.u, k * (t + kDerivH)))) /
        kpow;
    const double lm =
        log_fredholm_det(toeplitz_matrix(basis, Symbol::exp_minus_one(cfg.u, k * (t - kDerivH)))) /
        kpow;
    const double fd = (lp - lm) / (2.0 * kDerivH);

    const TruncatedBasis bt = build_basis(grid, k, shifted_weight(cfg.weight, cfg.u, t), row.D);
    const RVec dens = bergman_density_grid(bt);
    std::vector<double> terms;
    terms.reserve(1024);
    for (int i = 0; i < grid->num_nodes(); ++i) {
      const double uv = cfg.u.eval(grid->node(i));
      if (uv != 0.0) terms.push_back(grid->weights(i) * uv * dens(i));
    }
    const double claim = -pairwise_sum(terms) / std::pow(k, n);
    const double r = std::abs(fd - claim);
    worst = std::max(worst, r);
    if (r > kDerivRelTolerance * (1.0 + std::abs(fd))) deriv_ok = false;
  }
  row.deriv_residual = worst;
  row.valid = (row.tail_indicator <= kTailTolerance) && deriv_ok;
  return row;
}

} // namespace

ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg, int threads) {
  if (!cfg.u.is_zero()) {
    const auto gate = std::make_shared<const QuadratureGrid>(
        build_quadrature(cfg.domain, schedule_resolution(cfg, schedule_degree(cfg, cfg.k_schedule.front()))));
    const AdmissibilityReport adm = check_admissible(cfg.weight, cfg.u, *gate);
    if (!adm.admissible) {
      std::ostringstream os;
      os << "run_convergence_experiment: perturbation is not admissible "
         << "(lambda_min at t=0: " << adm.lambda_min_t0 << ", t=1: " << adm.lambda_min_t1
         << "); refusing to run";
      throw std::invalid_argument(os.str());
    }
  }

  ConvergenceReport rep;
  rep.seed = cfg.seed;
  rep.rows.resize(cfg.k_schedule.size());
  const int nrows = static_cast<int>(cfg.k_schedule.size());
  threads = std::max(1, std::min(threads, nrows));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= nrows || failed.load()) return;
      try {
        rep.rows[static_cast<std::size_t>(i)] = compute_row(cfg, cfg.k_schedule[static_cast<std::size_t>(i)]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(error_mu);
        failed.store(true);
        if (error.empty()) error = e.what();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw std::runtime_error("run_convergence_experiment: " + error);
  return rep;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

std::string report_to_string(const ConvergenceReport& report, const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    os << "k,D,N_D,lhs,rhs,gap,tail_indicator,deriv_residual,valid\n";
    for (const auto& r : report.rows) {
      os << fmt17(r.k) << ',' << r.D << ',' << r.N_D << ',' << fmt17(r.lhs) << ','
         << fmt17(r.rhs) << ',' << fmt17(r.gap) << ',' << fmt17(r.tail_indicator) << ','
         << fmt17(r.deriv_residual) << ',' << (r.valid ? 1 : 0) << '\n';
    }
    return os.str();
  }
  if (format == "json") {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["seed"] = report.seed;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
      nlohmann::ordered_json row;
      row["k"] = r.k;
      row["D"] = r.D;
      row["N_D"] = r.N_D;
      row["lhs"] = r.lhs;
      row["rhs"] = r.rhs;
      row["gap"] = r.gap;
      row["tail_indicator"] = r.tail_indicator;
      row["deriv_residual"] = r.deriv_residual;
      row["valid"] = r.valid;
      j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
  }
  throw std::invalid_argument("report_to_string: format must be csv or json");
}

void emit_report(const ConvergenceReport& report, std::ostream& os, const std::string& format) {
  os << report_to_string(report, format);
}

void emit_identity_report(const IdentityReport& report, std::ostream& os) {
  for (const auto& c : report.checks) {
    const char* tag = c.skipped ? "[SKIP]" : (c.passed ? "[PASS]" : "[FAIL]");
    os << tag << ' ' << c.name << "  measured=" << fmt17(c.measured)
       << "  tolerance=" << fmt17(c.tolerance);
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Identity suite
// ---------------------------------------------------------------------------

namespace {

struct SuiteBuilder {
  std::vector<CheckResult>& out;

  void add(const std::string& name, double measured, double tol, bool passed,
           const std::string& detail = "") {
    out.push_back({name, measured, tol, passed, false, detail});
  }
  void add_le(const std::string& name, double measured, double tol,
              const std::string& detail = "") {
    add(name, measured, tol, measured <= tol, detail);
  }
  void skip(const std::string& name, const std::string& why) {
    out.push_back({name, 0.0, 0.0, false, true, why});
  }
  void run(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.push_back({name + ".exception", 0.0, 0.0, false, false, e.what()});
    }
  }
};

// Closed-form squared norm of z^a on the unit disk under e^{-k|z|^2}.
double disk_monomial_norm2(int a, double k) {
  return std::numbers::pi * lower_incomplete_gamma(a + 1.0, k) / std::pow(k, a + 1.0);
}

std::vector<CVec> bulk_probes_disk(int count, double rmax) {
  std::vector<CVec> pts;
  const double golden = 2.399963229728653;
  for (int i = 0; i < count; ++i) {
    const double r = rmax * std::sqrt((i + 0.5) / count);
    const double th = golden * i;
    CVec z(1);
    z(0) = Complex(r * std::cos(th), r * std::sin(th));
    pts.push_back(z);
  }
  return pts;
}

} // namespace

IdentityReport run_identity_suite(const ExperimentConfig& cfg, const SuiteHooks& hooks,
                                  int threads) {
  IdentityReport rep;
  SuiteBuilder sb{rep.checks};

  // Canonical fixtures: unit disk with the rotation-invariant quadratic
  // weight, one admissible bump, five plain bump symbols; a small bidisk
  // and a box in two variables.
  const DomainSpec disk = DomainSpec::disk(1.0);
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  CVec uc(1);
  uc(0) = Complex(0.25, 0.0);
  const TestFunction u_main = TestFunction::bump(uc, 0.35, 0.05);
  const auto grid_d =
      std::make_shared<const QuadratureGrid>(build_quadrature(disk, {48, 96}));

  // --- geometry ---
  sb.run("quadrature_volume", [&] {
    const double e1 = std::abs(grid_d->weights.sum() - disk.volume()) / disk.volume();
    const DomainSpec bd = DomainSpec::bidisk(0.8, 0.6);
    const QuadratureGrid gb = build_quadrature(bd, {8, 16});
    const double e2 = std::abs(gb.weights.sum() - bd.volume()) / bd.volume();
    const DomainSpec bx = DomainSpec::box({{-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}});
    const QuadratureGrid gx = build_quadrature(bx, {8, 8, 8, 8});
    const double e3 = std::abs(gx.weights.sum() - bx.volume()) / bx.volume();
    sb.add_le("quadrature_volume", std::max({e1, e2, e3}), 1e-12);
  });

  sb.run("quadrature_spectral", [&] {
    const double got = integrate_real(*grid_d, [](const CVec& z) {
      return std::exp(-z.squaredNorm());
    });
    const double want = std::numbers::pi * (1.0 - std::exp(-1.0));
    sb.add_le("quadrature_spectral", std::abs(got - want) / want, 1e-12);
  });

  sb.run("integrate_linearity", [&] {
    auto f = [](const CVec& z) { return std::exp(z(0).real()) * std::cos(z(0).imag()); };
    auto g = [](const CVec& z) { return std::sin(2.0 * z(0).real()) + std::norm(z(0)); };
    const double lhs = integrate_real(*grid_d, [&](const CVec& z) { return 2.0 * f(z) - 3.0 * g(z); });
    const double rhs = 2.0 * integrate_real(*grid_d, f) - 3.0 * integrate_real(*grid_d, g);
    sb.add_le("integrate_linearity", std::abs(lhs - rhs), 1e-12 * (1.0 + std::abs(rhs)));
  });

  // --- weights ---
  sb.run("hessian_fd_quadratic", [&] {
    CVec z(1);
    z(0) = Complex(0.31, -0.12);
    const CMat H1 = complex_hessian_fd(
        [](const CVec& w) { return 2.0 * w.squaredNorm(); }, z, 1e-4 * (1.0 + z.norm()));
    double worst = (H1 - CMat(2.0 * CMat::Identity(1, 1))).cwiseAbs().maxCoeff();
    CVec z2(2);
    z2 << Complex(0.2, 0.1), Complex(-0.3, 0.25);
    const WeightFunction w2 = WeightFunction::quadratic_diagonal({1.0, 1.5});
    const CMat H2 = complex_hessian_fd(w2.eval, z2, 1e-4 * (1.0 + z2.norm()));
    CMat want = CMat::Zero(2, 2);
    want(0, 0) = 1.0;
    want(1, 1) = 1.5;
    worst = std::max(worst, (H2 - want).cwiseAbs().maxCoeff());
    sb.add_le("hessian_fd_quadratic", worst, 1e-6);
  });

  sb.run("hessian_fd_bump", [&] {
    double worst = 0.0;
    for (const CVec& z : bulk_probes_disk(10, 0.25)) {
      CVec p = z;
      p(0) += uc(0);
      const CMat fd = complex_hessian_fd([&](const CVec& w) { return u_main.eval(w); }, p,
                                         1e-4 * (1.0 + p.norm()));
      worst = std::max(worst, (fd - u_main.hessian(p)).cwiseAbs().maxCoeff());
    }
    sb.add_le("hessian_fd_bump", worst, 1e-5);
  });

  sb.run("admissibility_concavity", [&] {
    const AdmissibilityReport adm = check_admissible(phi, u_main, *grid_d);
    double interior = std::numeric_limits<double>::infinity();
    for (int s = 1; s < 10; ++s) {
      const double t = s / 10.0;
      for (int i = 0; i < grid_d->num_nodes(); ++i) {
        const CVec z = grid_d->node(i);
        interior = std::min(
            interior, hermitian_lambda_min(phi.hessian(z) + t * u_main.hessian(z)));
      }
    }
    const double endpoint = std::min(adm.lambda_min_t0, adm.lambda_min_t1);
    sb.add("admissibility_concavity", interior - endpoint, -1e-12,
           adm.admissible && interior >= endpoint - 1e-12,
           "interior minimum must not undercut the endpoints");
  });

  sb.run("admissibility_violation_detected", [&] {
    CVec c0 = CVec::Zero(1);
    const TestFunction bad = TestFunction::bump(c0, 0.3, 0.5);
    const AdmissibilityReport adm = check_admissible(phi, bad, *grid_d);
    sb.add("admissibility_violation_detected", adm.lambda_min_t1, 0.0, !adm.admissible,
           "steep bump must be rejected");
  });

  // --- orthonormal bases ---
  sb.run("gram_monomial_oracle_disk", [&] {
    double worst = 0.0;
    for (const double k : {1.0, 2.0, 4.0}) {
      const CMat G = gram_matrix(*grid_d, k, phi, 12);
      for (int a = 0; a <= 12; ++a) {
        const double want = disk_monomial_norm2(a, k);
        worst = std::max(worst, std::abs(G(a, a).real() - want) / want);
      }
      for (int a = 0; a <= 12; ++a)
        for (int b = 0; b < a; ++b)
          worst = std::max(worst, std::abs(G(a, b)) /
                                      std::sqrt(G(a, a).real() * G(b, b).real()));
    }
    sb.add_le("gram_monomial_oracle_disk", worst, 1e-10);
  });

  sb.run("gram_monomial_oracle_bidisk", [&] {
    const DomainSpec bd = DomainSpec::bidisk(1.0, 1.0);
    const auto gb = std::make_shared<const QuadratureGrid>(build_quadrature(bd, {8, 8}));
    const WeightFunction phi2 = WeightFunction::quadratic(1.0, 2);
    const CMat G = gram_matrix(*gb, 1.0, phi2, 3);
    const MultiIndexSet idx = MultiIndexSet::total_degree(2, 3);
    double worst = 0.0;
    for (int a = 0; a < idx.size(); ++a) {
      const double want = disk_monomial_norm2(idx.idx[static_cast<std::size_t>(a)].a[0], 1.0) *
                          disk_monomial_norm2(idx.idx[static_cast<std::size_t>(a)].a[1], 1.0);
      worst = std::max(worst, std::abs(G(a, a).real() - want) / want);
    }
    sb.add_le("gram_monomial_oracle_bidisk", worst, 1e-10,
              "includes the constant's norm pi^2 (1 - 1/e)^2");
  });

  sb.run("orthonormalize_identity_gram", [&] {
    const MultiIndexSet idx = MultiIndexSet::total_degree(1, 4);
    const CMat G = CMat::Identity(5, 5);
    const TruncatedBasis b = orthonormalize(G, idx, grid_d, 1.0, phi);
    double worst = (b.coeff - CMat::Identity(5, 5)).cwiseAbs().maxCoeff();
    for (int i = 0; i < 5; ++i)
      if (b.pivot[static_cast<std::size_t>(i)] != i) worst = 1.0;
    sb.add_le("orthonormalize_identity_gram", worst, 1e-14);
  });

  sb.run("orthonormalize_rank_drop", [&] {
    // Gram of the dependent family {1, z, z}: one pivot must be dropped.
    const MultiIndexSet idx = MultiIndexSet::total_degree(1, 2);
    CMat V(3, 3);
    for (int p = 0; p < 3; ++p) {
      const Complex z(0.2 + 0.3 * p, -0.1 * p);
      V(p, 0) = 1.0;
      V(p, 1) = z;
      V(p, 2) = z;
    }
    const CMat G = V.adjoint() * V;
    const TruncatedBasis b = orthonormalize(G, idx, grid_d, 1.0, phi);
    sb.add("orthonormalize_rank_drop", b.dim(), 2.0, b.dim() == 2, "retained dimension");
  });

  sb.run("gram_residual", [&] {
    CMat G = gram_matrix(*grid_d, 2.0, phi, 12);
    if (hooks.corrupt_gram) hooks.corrupt_gram(G);
    const TruncatedBasis b =
        orthonormalize(G, MultiIndexSet::total_degree(1, 12), grid_d, 2.0, phi);
    sb.add_le("gram_residual", gram_residual(b), 1e-10);
  });

  const TruncatedBasis basis_k2 = build_basis(grid_d, 2.0, phi, 16);
  const TruncatedBasis basis_k4 = build_basis(grid_d, 4.0, phi, 22);

  sb.run("kernel_hermitian_reproducing", [&] {
    const auto probes = bulk_probes_disk(5, 0.7);
    double worst = 0.0;
    for (const CVec& z : probes)
      for (const CVec& w : probes) {
        const Complex a = kernel_eval(basis_k2, z, w);
        const Complex b = kernel_eval(basis_k2, w, z);
        worst = std::max(worst, std::abs(a - std::conj(b)) / (1.0 + std::abs(a)));
      }
    // Reproducing property against a fixed polynomial in the span.
    CVec coef = CVec::Zero(basis_k2.dim());
    for (int i = 0; i < basis_k2.dim(); ++i)
      coef(i) = Complex(std::cos(1.0 + i), 0.5 * std::sin(2.0 + 0.7 * i));
    for (const CVec& z : probes) {
      Complex direct = 0.0, viaker = 0.0;
      CMat zp(1, 1);
      zp(0, 0) = z(0);
      const CVec ez = basis_matrix(basis_k2, zp).row(0).transpose();
      direct = (coef.transpose() * ez)(0, 0);
      std::vector<Complex> terms(static_cast<std::size_t>(grid_d->num_nodes()));
      const CMat Eg = basis_matrix(basis_k2, grid_d->nodes);
      for (int i = 0; i < grid_d->num_nodes(); ++i) {
        const Complex fz = (coef.transpose() * Eg.row(i).transpose())(0, 0);
        const Complex kzi = kernel_eval(basis_k2, z, grid_d->node(i));
        terms[static_cast<std::size_t>(i)] =
            grid_d->weights(i) * std::exp(-basis_k2.k * phi.eval(grid_d->node(i))) * kzi * fz;
      }
      viaker = pairwise_sum(terms);
      worst = std::max(worst, std::abs(direct - viaker) / (1.0 + std::abs(direct)));
    }
    sb.add_le("kernel_hermitian_reproducing", worst, 1e-10);
  });

  sb.run("density_integral_rank", [&] {
    const RVec dens = bergman_density_grid(basis_k4);
    std::vector<double> terms(static_cast<std::size_t>(grid_d->num_nodes()));
    for (int i = 0; i < grid_d->num_nodes(); ++i)
      terms[static_cast<std::size_t>(i)] = grid_d->weights(i) * dens(i);
    const double total = pairwise_sum(terms);
    sb.add_le("density_integral_rank", std::abs(total - basis_k4.dim()) / basis_k4.dim(), 1e-6);
  });

  sb.run("density_pointwise_convergence", [&] {
    const auto probes = bulk_probes_disk(20, 0.6);
    const TruncatedBasis b1 = build_basis(grid_d, 1.0, phi, 13);
    bool mono = true;
    double worst_ratio = 0.0;
    const double limit = 1.0 / std::numbers::pi;
    for (const CVec& z : probes) {
      const double e1 = std::abs(bergman_density(b1, z) / 1.0 - limit);
      const double e2 = std::abs(bergman_density(basis_k2, z) / 2.0 - limit);
      const double e4 = std::abs(bergman_density(basis_k4, z) / 4.0 - limit);
      if (!(e2 < e1 && e4 < e2)) mono = false;
      worst_ratio = std::max(worst_ratio, e4 / e2);
    }
    sb.add("density_pointwise_convergence", worst_ratio, 1.0, mono,
           "error vs k^n det(H)/pi^n must shrink at k = 1 -> 2 -> 4 on every bulk probe");
  });

  sb.run("scaled_density_bound", [&] {
    const TruncatedBasis b8 = build_basis(grid_d, 8.0, phi, 34);
    double sup = 0.0;
    for (int i = 0; i < grid_d->num_nodes(); ++i) {
      const CVec z = grid_d->node(i);
      if (z.norm() > 0.6) continue;
      sup = std::max({sup, bergman_density(basis_k2, z) / 2.0, bergman_density(basis_k4, z) / 4.0,
                      bergman_density(b8, z) / 8.0});
    }
    const double bound = 2.0 * density_limit(phi, CVec::Zero(1));
    sb.add_le("scaled_density_bound", sup, bound, "bulk scaled density vs twice the limit");
  });

  sb.run("tail_indicator_certifies", [&] {
    sb.add_le("tail_indicator_certifies", truncation_tail_indicator(basis_k4), 1e-8);
  });

  sb.run("tail_indicator_detects_small_D", [&] {
    const TruncatedBasis shallow = build_basis(grid_d, 4.0, phi, 4);
    const double tail = truncation_tail_indicator(shallow);
    sb.add("tail_indicator_detects_small_D", tail, 1e-4, tail > 1e-4,
           "degree at the scale itself must be flagged");
  });

  // --- Toeplitz operators ---
  const std::vector<TestFunction> symbols = [] {
    std::vector<TestFunction> v;
    auto mk = [](double x, double y, double r, double a) {
      CVec c(1);
      c(0) = Complex(x, y);
      return TestFunction::bump(c, r, a);
    };
    v.push_back(mk(0.0, 0.0, 0.5, 0.3));
    v.push_back(mk(0.3, 0.0, 0.4, -0.2));
    v.push_back(mk(-0.2, 0.25, 0.3, 0.15));
    v.push_back(mk(0.0, 0.35, 0.45, 0.25));
    v.push_back(mk(-0.3, -0.3, 0.35, -0.1));
    return v;
  }();

  sb.run("toeplitz_trace_identity", [&] {
    double worst = 0.0;
    for (const TruncatedBasis* b : {&basis_k2, &basis_k4})
      for (const TestFunction& g : symbols) {
        const Symbol s = Symbol::plain(g);
        const double lhs = trace_toeplitz(toeplitz_matrix(*b, s));
        const double rhs = trace_formula_rhs(*b, s);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
      }
    sb.add_le("toeplitz_trace_identity", worst, 1e-7, "5 symbols at k = 2 and k = 4");
  });

  sb.run("toeplitz_symbol_positivity", [&] {
    // For g = e^{-u}, the compressed operator inherits inf g as an
    // eigenvalue floor.
    const ToeplitzMatrix T = toeplitz_matrix(basis_k2, Symbol::exp_minus_one(u_main, 1.0));
    const CMat full = CMat::Identity(T.dim(), T.dim()) + T.M;
    Eigen::SelfAdjointEigenSolver<CMat> es(full, Eigen::EigenvaluesOnly);
    const double lo = std::exp(-u_main.amplitude);  // inf of e^{-u}
    sb.add("toeplitz_symbol_positivity", es.eigenvalues().minCoeff(), lo,
           es.eigenvalues().minCoeff() >= lo - 1e-8, "eigenvalue floor inf e^{-u}");
  });

  sb.run("fredholm_series_small_rank", [&] {
    const auto gs = std::make_shared<const QuadratureGrid>(build_quadrature(disk, {16, 32}));
    CVec c0 = CVec::Zero(1);
    const Symbol s = Symbol::plain(TestFunction::bump(c0, 0.6, 0.3));
    double worst = 0.0;
    for (int D = 0; D <= 2; ++D) {
      const TruncatedBasis b = build_basis(gs, 1.0, phi, D);
      const double series = fredholm_det_series(b, s);
      const double chol = log_fredholm_det(toeplitz_matrix(b, s));
      worst = std::max(worst, std::abs(series - chol) / (1.0 + std::abs(chol)));
    }
    const TruncatedBasis b1 = build_basis(gs, 1.0, phi, 1);
    const Symbol se = Symbol::exp_minus_one(TestFunction::bump(c0, 0.6, 0.2), 2.0);
    worst = std::max(worst, std::abs(fredholm_det_series(b1, se) -
                                     log_fredholm_det(toeplitz_matrix(b1, se))));
    sb.add_le("fredholm_series_small_rank", worst, 1e-8, "ranks 1..3, plain and exponential symbols");
  });

  sb.run("fredholm_basis_independence", [&] {
    const WeightFunction psi = WeightFunction::quadratic(1.3, 1);
    const TruncatedBasis be = build_basis(grid_d, 2.0, phi, 10);
    const TruncatedBasis bf = build_basis(grid_d, 2.0, psi, 10);
    const ToeplitzMatrix T = toeplitz_matrix(be, Symbol::exp_minus_one(u_main, 2.0));
    sb.add_le("fredholm_basis_independence", basis_change_logdet_gap(be, bf, T.M), 1e-8,
              "log det under a change of orthonormal basis");
  });

  sb.run("jacobi_formula", [&] {
    // Strong-signal path: the identity needs only I + M(t) positive
    // definite, so a large bump keeps the h^2 truncation error of the
    // central difference far above roundoff.
    CVec c0 = CVec::Zero(1);
    const TestFunction u_jac = TestFunction::bump(c0, 0.55, 1.2);
    auto path = [&](double t) {
      return toeplitz_matrix(basis_k2, Symbol::exp_minus_one(u_jac, t)).M;
    };
    double worst = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    for (const double t0 : {0.25, 0.5, 0.75}) {
      const DerivativeCheck big = logdet_derivative_check(path, t0, 1e-3);
      const DerivativeCheck small = logdet_derivative_check(path, t0, 5e-4);
      const double eb = std::abs(big.fd - big.trace);
      const double es = std::abs(small.fd - small.trace);
      worst = std::max(worst, es / (1.0 + std::abs(small.fd)));
      if (es > 0.0) worst_ratio = std::min(worst_ratio, eb / es);
    }
    sb.add("jacobi_formula", worst, 1e-6,
           worst <= 1e-6 && worst_ratio >= 2.0,
           "fd vs trace, and the mismatch must shrink about 4x when h halves");
  });

  sb.run("inverse_kernel_identity", [&] {
    const TruncatedBasis shift = build_basis(grid_d, 4.0, shifted_weight(phi, u_main, 1.0), 22);
    const double res = toeplitz_inverse_kernel_residual(basis_k4, shift, u_main, 4.0);
    sb.add_le("inverse_kernel_identity", res, 1e-6);
  });

  // --- point process ---
  sb.run("projection_spectrum", [&] {
    sb.add_le("projection_spectrum", gram_residual(basis_k2), 1e-8,
              "kernel eigenvalues must sit at 1 to working precision");
  });

  if (!cfg.mc_enabled) {
    sb.skip("dpp_count", "mc disabled in config");
    sb.skip("dpp_reproducible", "mc disabled in config");
    sb.skip("laplace_vs_determinant", "mc disabled in config");
    sb.skip("intensity_radial", "mc disabled in config");
    sb.skip("intensity_sectors", "mc disabled in config");
    sb.skip("two_point_factorization", "mc disabled in config");
  } else {
    const DppSampler sampler(basis_k2);

    sb.run("dpp_count", [&] {
      bool ok = true;
      for (int i = 0; i < 50; ++i) {
        const PointConfiguration c = sampler.sample(cfg.seed, static_cast<std::uint64_t>(i));
        if (c.size() != basis_k2.dim()) ok = false;
        for (int p = 0; p < c.size(); ++p)
          if (!disk.contains(c.points.row(p).transpose())) ok = false;
      }
      sb.add("dpp_count", basis_k2.dim(), basis_k2.dim(), ok,
             "every draw has exactly N_D in-domain points");
    });

    sb.run("dpp_reproducible", [&] {
      const PointConfiguration a = sampler.sample(cfg.seed, 5);
      const PointConfiguration b = sampler.sample(cfg.seed, 5);
      const PointConfiguration c = sampler.sample(cfg.seed, 6);
      const bool same = (a.points - b.points).cwiseAbs().maxCoeff() == 0.0;
      const bool diff = (a.points - c.points).cwiseAbs().maxCoeff() > 0.0;
      sb.add("dpp_reproducible", same && diff ? 0.0 : 1.0, 0.0, same && diff,
             "same stream repeats, distinct streams differ");
    });

    const int nsamp = std::min(cfg.mc_samples, 4000);

    sb.run("laplace_vs_determinant", [&] {
      const McEstimate mc =
          estimate_laplace_functional(basis_k2, u_main, basis_k2.k, nsamp, cfg.seed, threads);
      const double det =
          std::exp(log_fredholm_det(toeplitz_matrix(basis_k2, Symbol::exp_minus_one(u_main, basis_k2.k))));
      const double zscore = std::abs(mc.mean - det) / mc.stderr_;
      std::ostringstream detail;
      detail << "mc=" << mc.mean << " det=" << det << " stderr=" << mc.stderr_;
      sb.add("laplace_vs_determinant", zscore, 3.5, zscore <= 3.5, detail.str());
    });

    std::vector<PointConfiguration> samples(static_cast<std::size_t>(nsamp));
    {
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= nsamp) return;
          samples[static_cast<std::size_t>(i)] =
              sampler.sample(cfg.seed + 1, static_cast<std::uint64_t>(i));
        }
      };
      std::vector<std::thread> pool;
      const int tcount = std::max(1, threads);
      for (int t = 0; t < tcount; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    sb.run("intensity_radial", [&] {
      const IntensityHistogram h = empirical_intensity(samples, basis_k2, 6, 1);
      double worst = 0.0;
      for (int r = 0; r < 6; ++r) {
        const double expct = h.expected(r, 0) * nsamp;
        const double dev = std::abs(h.counts(r, 0) - expct) / expct;
        worst = std::max(worst, dev);
      }
      sb.add_le("intensity_radial", worst, 0.05, "equal-area annuli, >= 1e3 expected counts each");
    });

    sb.run("intensity_sectors", [&] {
      // Rotation invariance: sector counts in a fixed annulus are exchangeable.
      const int S = 8;
      std::vector<double> counts(S, 0.0);
      double total = 0.0;
      for (const auto& cfgp : samples)
        for (int p = 0; p < cfgp.size(); ++p) {
          const Complex z = cfgp.points(p, 0);
          const double r = std::abs(z);
          if (r < 0.3 || r > 0.7) continue;
          double th = std::arg(z);
          if (th < 0) th += 2.0 * std::numbers::pi;
          counts[static_cast<std::size_t>(std::min(S - 1, static_cast<int>(th / (2.0 * std::numbers::pi) * S)))] += 1.0;
          total += 1.0;
        }
      double chi2 = 0.0;
      for (int s = 0; s < S; ++s) {
        const double e = total / S;
        chi2 += (counts[static_cast<std::size_t>(s)] - e) * (counts[static_cast<std::size_t>(s)] - e) / e;
      }
      const double p = chi_squared_sf(S - 1, chi2);
      sb.add("intensity_sectors", p, 0.01, p >= 0.01, "chi-squared homogeneity p-value");
    });

    sb.run("two_point_factorization", [&] {
      CVec ca(1), cb(1);
      ca(0) = Complex(-0.45, 0.0);
      cb(0) = Complex(0.45, 0.0);
      const Region A{ca, 0.22}, B{cb, 0.22};
      const double want = expected_pair_count(basis_k2, A, B);
      std::vector<double> prod(static_cast<std::size_t>(nsamp));
      for (int i = 0; i < nsamp; ++i) {
        int na = 0, nb = 0;
        const auto& pts = samples[static_cast<std::size_t>(i)].points;
        for (int p = 0; p < pts.rows(); ++p) {
          const Complex z = pts(p, 0);
          if (std::abs(z - ca(0)) <= A.radius) ++na;
          if (std::abs(z - cb(0)) <= B.radius) ++nb;
        }
        prod[static_cast<std::size_t>(i)] = static_cast<double>(na) * nb;
      }
      const double mean = pairwise_sum(prod) / nsamp;
      std::vector<double> dev(prod.size());
      for (std::size_t i = 0; i < prod.size(); ++i) {
        const double d = prod[i] - mean;
        dev[i] = d * d;
      }
      const double se = std::sqrt(pairwise_sum(dev) / (static_cast<double>(nsamp) * (nsamp - 1.0)));
      const double z = std::abs(mean - want) / std::max(se, 1e-12);
      std::ostringstream detail;
      detail << "mc=" << mean << " kernel=" << want << " stderr=" << se;
      sb.add("two_point_factorization", z, 3.5, z <= 3.5, detail.str());
    });
  }

  // --- energy ---
  sb.run("energy_zero", [&] {
    const EnergyReport r = ma_energy(phi, TestFunction::zero(1), *grid_d);
    sb.add_le("energy_zero", std::abs(r.energy), 0.0, "zero perturbation costs nothing");
  });

  sb.run("energy_closed_form_n1", [&] {
    const EnergyReport r = ma_energy(phi, u_main, *grid_d);
    const double direct = integrate_real(*grid_d, [&](const CVec& z) {
      const double uu = u_main.eval(z);
      const double upp = u_main.hessian(z)(0, 0).real();
      return uu * (2.0 * phi.hessian(z)(0, 0).real() + upp) / (2.0 * std::numbers::pi);
    });
    sb.add_le("energy_closed_form_n1", std::abs(r.energy - direct) / (1.0 + std::abs(direct)),
              1e-12, "mixed-term assembly vs the one-variable closed form");
  });

  sb.run("energy_cocycle", [&] {
    const EnergyReport a = ma_energy(phi, u_main, *grid_d);
    const EnergyReport b = ma_energy(shifted_weight(phi, u_main, 1.0), u_main.scaled(-1.0), *grid_d);
    sb.add_le("energy_cocycle", std::abs(a.energy + b.energy), 1e-12 * (1.0 + std::abs(a.energy)),
              "E_phi(u) = -E_{phi+u}(-u)");
  });

  sb.run("energy_positive", [&] {
    const EnergyReport r = ma_energy(phi, u_main, *grid_d);
    sb.add("energy_positive", r.energy, 0.0, r.energy > 0.0, "nonnegative bump has positive energy");
  });

  sb.run("energy_primitive_n1", [&] {
    std::vector<double> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(0.05 + 0.09 * i);
    const double res = energy_primitive_residual(phi, u_main, ts, 2e-4, *grid_d);
    sb.add_le("energy_primitive_n1", res, 1e-6);
  });

  const DomainSpec box2 =
      DomainSpec::box({{-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}, {-0.7, 0.7}});
  const WeightFunction phi2 = WeightFunction::quadratic_diagonal({1.0, 1.5});
  CVec uc2(2);
  uc2 << Complex(0.1, 0.0), Complex(-0.05, 0.05);
  const TestFunction u2 = TestFunction::bump(uc2, 0.3, 0.012);
  const QuadratureGrid grid_b = build_quadrature(box2, {10, 10, 10, 10});

  sb.run("energy_primitive_n2", [&] {
    std::vector<double> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(0.05 + 0.09 * i);
    const double res = energy_primitive_residual(phi2, u2, ts, 2e-4, grid_b);
    sb.add_le("energy_primitive_n2", res, 1e-6);
  });

  sb.run("energy_fundamental_theorem", [&] {
    auto [xs, ws] = gauss_legendre(16);
    double worst = 0.0;
    {
      double integral = 0.0;
      for (int i = 0; i < 16; ++i)
        integral += 0.5 * ws(i) * ma_energy_derivative(phi, u_main, 0.5 * (xs(i) + 1.0), *grid_d);
      const double want = ma_energy(phi, u_main, *grid_d).energy;
      worst = std::max(worst, std::abs(integral - want) / (1.0 + std::abs(want)));
    }
    {
      double integral = 0.0;
      for (int i = 0; i < 16; ++i)
        integral += 0.5 * ws(i) * ma_energy_derivative(phi2, u2, 0.5 * (xs(i) + 1.0), grid_b);
      const double want = ma_energy(phi2, u2, grid_b).energy;
      worst = std::max(worst, std::abs(integral - want) / (1.0 + std::abs(want)));
    }
    sb.add_le("energy_fundamental_theorem", worst, 1e-8,
              "integral of the derivative recovers the energy, n = 1 and n = 2");
  });

  return rep;
}

} // namespace bdpp
