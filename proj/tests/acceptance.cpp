// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N] [--workdir DIR] [--config FILE]
//
// Without --criterion every criterion runs in order. Criteria 7 to 9 run the
// full pipeline on the reproduction config and leave their artifacts under
// the work directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ktube/cli.hpp"
#include "ktube/greedy.hpp"
#include "ktube/kernels.hpp"
#include "ktube/parallel.hpp"
#include "ktube/scenario.hpp"
#include "ktube/socp.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ktube;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Settings {
  fs::path workdir;
  fs::path config;
};

std::string num(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

void note(Outcome& o, bool ok, const std::string& what) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what + (ok ? "" : " [fail]");
  o.pass = o.pass && ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  const int code = cli::run(args, out, std::cerr);
  if (code != 0) std::cerr << "ktube " << args.front() << " exited with " << code << '\n';
  return code;
}

PointSet uniform_points(Index n, Index d, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = u(g);
  return PointSet(std::move(m));
}

// ---- 1 ---------------------------------------------------------------------

Outcome sample_size(const Settings&) {
  Outcome o;
  const auto n_bisect = min_samples_bisect(0.025, 1e-6, 61);
  const auto n_bound = min_samples_bound(0.025, 1e-6, 60);
  note(o, std::abs(static_cast<double>(n_bisect) - 4200.0) <= 0.15 * 4200.0,
       "bisection N = " + std::to_string(n_bisect) + " (reference 4200 +-15%)");
  note(o, n_bound == 5906, "closed form N = " + std::to_string(n_bound) + " (expected 5906)");
  note(o, n_bisect <= n_bound, "bisection <= closed form");
  return o;
}

// ---- 2 ---------------------------------------------------------------------

Outcome binomial_tail_oracle(const Settings&) {
  Outcome o;
  std::mt19937_64 g(2024);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::int64_t N = std::uniform_int_distribution<std::int64_t>(1, 30)(g);
    const std::int64_t k = std::uniform_int_distribution<std::int64_t>(0, N)(g);
    const double eps = std::uniform_real_distribution<double>(1e-3, 0.999)(g);
    const double exact = oracle::binomial_tail_rational(N, k, eps);
    const double got = binomial_tail(N, k, eps);
    const double rel = exact == 0.0 ? std::abs(got) : std::abs(got - exact) / exact;
    worst = std::max(worst, rel);
  }
  note(o, worst <= 1e-12, "200 small triples, worst relative error " + num(worst, 3));
  const double ref = oracle::binomial_tail_dec50(4200, 60, 0.025);
  const double got = binomial_tail(4200, 60, 0.025);
  const double rel = std::abs(got - ref) / ref;
  note(o, rel <= 1e-10, "(4200, 60, 0.025): tail " + num(got, 10) + ", relative error " + num(rel, 3));
  return o;
}

// ---- 3 ---------------------------------------------------------------------

Outcome power_function(const Settings&) {
  Outcome o;
  const KernelSpec k{KernelFamily::Matern52, 1.0, 1.0};
  const PointSet X = uniform_points(2000, 3, -2.0, 2.0, 31);
  const PointSet T = uniform_points(500, 3, -2.0, 2.0, 32);

  const Vector p0 = power_all(k, PointSet(3), T);
  note(o, (p0.array() - std::sqrt(k.variance)).abs().maxCoeff() <= 1e-15, "P_empty = sqrt(k(x,x))");

  const BasisSelection b = p_greedy(k, X, 1e-300, 60);
  const Vector incr = b.residual_power_sq.cwiseMax(0.0).cwiseSqrt();
  double at_centers = 0.0;
  for (Index i : b.center_indices) at_centers = std::max(at_centers, incr[i]);
  note(o, b.size() == 60 && at_centers <= 1e-9, "max P_Z at centers " + num(at_centers, 3));

  Vector prev = p0;
  double worst_increase = -1.0;
  PointSet Z(3);
  for (Index j = 0; j < b.size(); ++j) {
    Z.push_back(b.centers.point(j));
    const Vector cur = oracle::power_dense(k, Z, T);
    worst_increase = std::max(worst_increase, (cur - prev).maxCoeff());
    prev = cur;
  }
  note(o, worst_increase <= 1e-10, "largest increase on 500 test points " + num(worst_increase, 3));

  const Vector dense = oracle::power_dense(k, b.centers, X);
  double worst_hist = 0.0;
  for (Index j : {Index{1}, Index{15}, Index{30}, Index{45}, Index{59}}) {
    PointSet Zj(3);
    for (Index t = 0; t < j; ++t) Zj.push_back(b.centers.point(t));
    worst_hist = std::max(worst_hist, std::abs(oracle::power_dense(k, Zj, X).maxCoeff() -
                                               b.max_power_history[static_cast<std::size_t>(j)]));
  }
  const double dev = std::max((dense - incr).cwiseAbs().maxCoeff(), worst_hist);
  note(o, dev <= 1e-7, "incremental vs batch over 60 steps " + num(dev, 3));
  return o;
}

// ---- 4 ---------------------------------------------------------------------

Outcome rkhs_ball_bound(const Settings&) {
  Outcome o;
  const KernelSpec k{KernelFamily::Matern52, 2.0, 1.0};
  const double R = 350.0;
  const PointSet X = sample_inputs(1500, Box{}, 41, Stream::Candidates);
  const BasisSelection b = p_greedy(k, X, (0.1 / R) * (0.1 / R), 120);
  const Vector P = b.residual_power_sq.cwiseMax(0.0).cwiseSqrt();
  const Matrix KXZ = cross_matrix(k, X, b.centers);

  std::mt19937_64 g(42);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> scale(0.5, 1.0);
  double worst_slack = -std::numeric_limits<double>::infinity();
  for (int f = 0; f < 50; ++f) {
    const PointSet C = sample_inputs(25, Box{}, 1000 + static_cast<std::uint64_t>(f), Stream::Synthetic);
    Vector c(C.size());
    for (Index i = 0; i < c.size(); ++i) c[i] = z(g);
    const double norm = std::sqrt(c.dot(gram(k, C, 0.0) * c));
    c *= scale(g) * R / norm;
    const Vector fX = cross_matrix(k, X, C) * c;
    Vector fZ(b.size());
    for (Index i = 0; i < b.size(); ++i) fZ[i] = fX[b.center_indices[static_cast<std::size_t>(i)]];
    const Vector w = interpolation_weights(k, b.centers, fZ, 0.0);
    const Vector err = (fX - KXZ * w).cwiseAbs();
    worst_slack = std::max(worst_slack, (err - R * P).maxCoeff());
  }
  note(o, worst_slack <= 1e-6,
       "n = " + std::to_string(b.size()) + ", max(|f - s_f| - R P_Z) over 50 functions " + num(worst_slack, 3));
  return o;
}

// ---- 5 ---------------------------------------------------------------------

Outcome decay(const Settings&) {
  Outcome o;
  const KernelSpec k{KernelFamily::Matern52, 1.0, 1.0};
  const PointSet X = uniform_points(2000, 1, -1.0, 1.0, 51);
  const BasisSelection b = p_greedy(k, X, 1e-300, 100);
  const DecayReport r = decay_fit(b.max_power_history, DecayModel::Algebraic, 1, k.smoothness());
  note(o, b.size() == 100, "steps " + std::to_string(b.size()));
  note(o, r.fitted_slope <= -1.5,
       "fitted slope " + num(r.fitted_slope, 4) + " (theoretical " + num(r.theoretical_exponent, 3) + ", r2 " +
           num(r.fit_r2, 4) + ")");
  return o;
}

// ---- 6 ---------------------------------------------------------------------

Outcome solver(const Settings&) {
  Outcome o;
  ScenarioProgram cheb;
  cheb.gram_factor = Matrix::Identity(1, 1);
  cheb.features = Matrix::Ones(5, 1);
  cheb.targets = Vector(5);
  cheb.targets << -1.0, 0.5, 2.0, 3.5, 7.0;
  cheb.norm_bound = 100.0;
  const IpmSolution s = solve_ipm(cheb);
  const double dg = std::abs(s.gamma - 4.0), da = std::abs(s.alpha[0] - 3.0);
  note(o, dg <= 1e-9 && da <= 1e-7 && s.kkt_residual <= 1e-8,
       "Chebyshev centre gamma error " + num(dg, 3) + ", centre error " + num(da, 3));

  std::mt19937_64 g(61);
  double worst_gap = 0.0, worst_kkt = 0.0;
  int not_optimal = 0;
  for (int t = 0; t < 100; ++t) {
    const ScenarioProgram p = oracle::random_tiny_program(g);
    const IpmSolution r = solve_ipm(p);
    if (r.status != SolveStatus::Optimal) ++not_optimal;
    worst_gap = std::max(worst_gap, std::abs(r.gamma - oracle::scenario_gamma_search(p)));
    worst_kkt = std::max(worst_kkt, r.kkt_residual);
  }
  note(o, worst_gap <= 1e-3, "100 tiny instances, worst |gamma - search| " + num(worst_gap, 3));
  note(o, worst_kkt <= 1e-8 && not_optimal == 0,
       "worst KKT residual " + num(worst_kkt, 3) + ", non-optimal " + std::to_string(not_optimal));
  return o;
}

// ---- 7 to 9 ------------------------------------------------------------------

std::string hw_threads() { return std::to_string(std::max(1u, std::thread::hardware_concurrency())); }

bool model_is_current(const fs::path& model_path, const fs::path& config) {
  if (!fs::exists(model_path)) return false;
  const auto cfg = load_config(config);
  const auto want = make_provenance(nlohmann::json(cfg), cfg.identify.seeds);
  const auto have = extract_provenance(slurp(model_path));
  return have && *have == want;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome end_to_end(const Settings& s) {
  Outcome o;
  const fs::path dir = s.workdir / "end_to_end";
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> common{"--config", s.config.string(), "--out", dir.string(), "--threads",
                                        hw_threads()};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), common.begin(), common.end());
    return a;
  };
  if (run_cli(with({"identify"})) != 0 || run_cli(with({"validate"})) != 0) {
    note(o, false, "pipeline did not complete");
    return o;
  }
  const double elapsed = seconds_since(t0);
  const auto model = read_json(dir / "model.json");
  const auto val = read_json(dir / "validation.json");
  const double g1 = model.at("gammas")[0], g2 = model.at("gammas")[1];
  const Index n = model.at("centers").size();
  note(o, true, "basis size " + std::to_string(n) + " (reference 60, not gated), N " +
                    std::to_string(model.at("N").get<std::int64_t>()));
  note(o, g1 >= 0.04 && g1 <= 0.12, "gamma_1 " + num(g1, 4) + " in [0.04, 0.12]");
  note(o, g2 >= 0.04 && g2 <= 0.12, "gamma_2 " + num(g2, 4) + " in [0.04, 0.12]");
  const double joint = val.at("joint_rate"), limit = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 1e5);
  note(o, val.at("samples") == 100000 && joint <= limit,
       "joint violation " + num(joint, 4) + " on " + std::to_string(val.at("samples").get<Index>()) +
           " samples (limit " + num(limit, 4) + ")");
  note(o, elapsed < 600.0, "runtime " + num(elapsed, 4) + " s (limit 600)");
  return o;
}

Outcome planner(const Settings& s) {
  Outcome o;
  const fs::path dir = s.workdir / "planner";
  fs::create_directories(dir);
  const fs::path model = s.workdir / "end_to_end" / "model.json";
  const std::vector<std::string> common{"--config", s.config.string(), "--out", dir.string(), "--threads",
                                        hw_threads()};
  if (!model_is_current(model, s.config)) {
    std::vector<std::string> a{"identify", "--config", s.config.string(), "--out", (s.workdir / "end_to_end").string(),
                               "--threads", hw_threads()};
    if (run_cli(a) != 0) {
      note(o, false, "identification did not complete");
      return o;
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> a{"plan", "--model", model.string()};
  a.insert(a.end(), common.begin(), common.end());
  if (run_cli(a) != 0) {
    note(o, false, "planning did not complete");
    return o;
  }
  const double elapsed = seconds_since(t0);
  const auto plan = read_json(dir / "plan.json");
  const auto& rollouts = plan.at("rollouts");
  const double worst = plan.at("worst_terminal_error");
  const int tube_hits = plan.at("tube_collisions");
  int far = 0;
  for (const auto& r : rollouts) far += r.at("terminal_error").get<double>() > 1.0;
  note(o, rollouts.size() == 20, std::to_string(rollouts.size()) + " rollouts");
  note(o, worst <= 1.0,
       "worst terminal error " + num(worst, 4) + " (" + std::to_string(far) + " rollouts beyond 1.0)");
  note(o, tube_hits == 0, "tube/obstacle intersections " + std::to_string(tube_hits));
  note(o, plan.at("state_collisions") == 0,
       "true states inside the obstacle " + std::to_string(plan.at("state_collisions").get<int>()));
  note(o, elapsed < 300.0, "runtime " + num(elapsed, 4) + " s (limit 300)");
  return o;
}

Outcome determinism(const Settings& s) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path base = s.workdir / "determinism";
  auto repro = [&](const std::string& name, const std::string& threads) {
    return run_cli({"repro", "--config", s.config.string(), "--out", (base / name).string(), "--threads", threads});
  };
  if (repro("first", "1") != 0 || repro("second", "1") != 0 || repro("threads8", "8") != 0) {
    note(o, false, "repro did not complete");
    return o;
  }
  for (const char* f : {"model.json", "trajectory.csv"}) {
    note(o, slurp(base / "first" / f) == slurp(base / "second" / f), std::string(f) + " byte-identical across runs");
  }
  bool same = true;
  std::string differing;
  for (const char* f : {"model.json", "training.csv", "validation.json", "trajectory.csv", "rollouts.csv",
                        "plan.json", "summary.json"}) {
    if (slurp(base / "first" / f) != slurp(base / "threads8" / f)) {
      same = false;
      differing += std::string(" ") + f;
    }
  }
  note(o, same, "--threads 1 vs --threads 8 numeric outputs identical" + (same ? "" : ":" + differing));
  const double elapsed = seconds_since(t0);
  note(o, elapsed < 900.0, "runtime " + num(elapsed, 4) + " s (limit 900)");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // runtime gate for criteria that do not check it themselves
  std::function<Outcome(const Settings&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ktube acceptance suite"};
  int only = 0;
  std::string workdir = "acceptance_work";
  std::string config = KTUBE_REPRO_CONFIG;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(0, 9));
  app.add_option("--workdir", workdir, "Directory for pipeline artifacts");
  app.add_option("--config", config, "Reproduction configuration");
  CLI11_PARSE(app, argc, argv);

  const Settings settings{workdir, config};
  fs::create_directories(settings.workdir);
  parallel::set_threads(std::max(1u, std::thread::hardware_concurrency()));

  const std::vector<Criterion> criteria{
      {1, "sample size", 1.0, sample_size},
      {2, "binomial tail oracle", 10.0, binomial_tail_oracle},
      {3, "power function", 30.0, power_function},
      {4, "RKHS ball error bound", 60.0, rkhs_ball_bound},
      {5, "power decay", 60.0, decay},
      {6, "solver correctness", 60.0, solver},
      {7, "end-to-end identification", 0.0, end_to_end},
      {8, "planner feasibility", 0.0, planner},
      {9, "determinism", 0.0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(settings);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(t0);
    if (c.limit_s > 0.0) note(o, elapsed < c.limit_s, "runtime " + num(elapsed, 3) + " s (limit " + num(c.limit_s) + ")");
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << num(elapsed, 4) << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
