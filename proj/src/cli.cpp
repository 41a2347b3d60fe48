#include "ktube/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ktube/parallel.hpp"
#include "ktube/svg.hpp"

namespace ktube::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 0;
  bool verbose = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "Experiment configuration (JSON)");
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--seed-override", c.seed_override,
                  "Replace the seed set by (s, s+1, s+2, s+3) for candidates, training, validation, planning");
  sub->add_option("--threads", c.threads, "Worker threads (default: hardware concurrency)");
  sub->add_flag("--verbose", c.verbose, "Progress messages on stderr");
}

class Log {
 public:
  Log(std::ostream& err, bool on) : err_(err), on_(on), start_(std::chrono::steady_clock::now()) {}
  void operator()(const std::string& msg) const {
    if (!on_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "[%8.2fs] ", s);
    err_ << buf << msg << '\n';
  }

 private:
  std::ostream& err_;
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

struct Context {
  ExperimentConfig config;
  Provenance provenance;
  fs::path out;
};

Context prepare(const Common& c) {
  Context ctx;
  if (!c.config_path.empty()) ctx.config = load_config(c.config_path);
  if (c.seed_override) {
    const std::uint64_t s = *c.seed_override;
    ctx.config.identify.seeds = Seeds{s, s + 1, s + 2, s + 3};
    ctx.config.identify.seeds.validate();
  }
  ctx.provenance = make_provenance(nlohmann::json(ctx.config), ctx.config.identify.seeds);
  ctx.out = c.out_dir;
  fs::create_directories(ctx.out);
  parallel::set_threads(c.threads > 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency()));
  return ctx;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "out: cannot write '" + path.string() + "'");
  f << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

TubeModel load_model(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_text(path), nullptr, false);
  require(!j.is_discarded(), "model: malformed JSON in '" + path.string() + "'");
  return j.get<TubeModel>();
}

nlohmann::json validation_json(const ValidationReport& v, Index M) {
  const double se = std::sqrt(0.05 * 0.95 / static_cast<double>(M));
  return nlohmann::json{{"samples", v.samples},
                        {"seed", v.seed},
                        {"rates", {v.rates[0], v.rates[1]}},
                        {"joint_rate", v.joint_rate},
                        {"joint_limit", 0.05 + 3.0 * se}};
}

nlohmann::json plan_json(const PlanOutcome& p, const PlanConfig& cfg) {
  nlohmann::json rollouts = nlohmann::json::array();
  for (std::size_t i = 0; i < p.monte_carlo.rollouts.size(); ++i) {
    const auto& r = p.monte_carlo.rollouts[i];
    rollouts.push_back({{"x0", {p.monte_carlo.initial_states[i][0], p.monte_carlo.initial_states[i][1]}},
                        {"terminal_error", r.terminal_error},
                        {"tube_collisions", r.tube_collisions},
                        {"state_collisions", r.state_collisions},
                        {"infeasible_plans", r.infeasible_plans}});
  }
  return nlohmann::json{
      {"plan", cfg},
      {"nominal",
       {{"cost", p.nominal.cost},
        {"feasible", p.nominal.feasible},
        {"collisions", p.nominal.collisions},
        {"terminal_error", (p.nominal.nominal.back() - cfg.xf).norm()},
        {"best_cost_history", p.nominal.best_cost_history}}},
      {"unconstrained",
       {{"cost", p.unconstrained.cost}, {"terminal_error", (p.unconstrained.nominal.back() - cfg.xf).norm()}}},
      {"rollouts", rollouts},
      {"tube_collisions", p.monte_carlo.tube_collisions},
      {"state_collisions", p.monte_carlo.state_collisions},
      {"worst_terminal_error", p.monte_carlo.worst_terminal_error},
  };
}

void write_plan_artifacts(const Context& ctx, const TubeModel& model, const PlanOutcome& p) {
  const PlanConfig& cfg = ctx.config.plan;
  write_trajectory_csv(ctx.out / "trajectory.csv", p.nominal, ctx.provenance);

  std::string rows = csv_provenance_line(ctx.provenance) + "\nrollout,step,x1,x2,u\n";
  for (std::size_t i = 0; i < p.monte_carlo.rollouts.size(); ++i) {
    const auto& r = p.monte_carlo.rollouts[i];
    for (std::size_t k = 0; k < r.states.size(); ++k) {
      rows += std::to_string(i) + "," + std::to_string(k) + "," + fmt(r.states[k][0]) + "," + fmt(r.states[k][1]) +
              "," + (k < r.controls.size() ? fmt(r.controls[k]) : std::string()) + "\n";
    }
  }
  write_text(ctx.out / "rollouts.csv", rows);

  TrajectoryFigure fig;
  fig.x_min = model.sim.domain.lower[0];
  fig.x_max = model.sim.domain.upper[0];
  fig.y_min = model.sim.domain.lower[1];
  fig.y_max = model.sim.domain.upper[1];
  fig.obstacle = cfg.obstacle;
  fig.x0 = cfg.x0;
  fig.xf = cfg.xf;
  fig.unconstrained = p.unconstrained.nominal;
  fig.tube = p.nominal.tube;
  for (const auto& r : p.monte_carlo.rollouts) fig.rollouts.push_back(r.states);
  write_text(ctx.out / "trajectories.svg", render_trajectories(fig, ctx.provenance));

  auto j = plan_json(p, cfg);
  j["provenance"] = provenance_json(ctx.provenance);
  write_json(ctx.out / "plan.json", j);
}

// ---- subcommands ----------------------------------------------------------

int cmd_greedy(const Common& c, const std::string& input, std::optional<double> tol, std::optional<Index> max_n,
               std::ostream& out, const Log& log) {
  const Context ctx = prepare(c);
  const IdentifyConfig& id = ctx.config.identify;
  const PointSet X = input.empty()
                         ? sample_inputs(id.candidate_count, id.sim.domain, id.seeds.candidates, Stream::Candidates)
                         : read_points_csv(input);
  const double t = tol.value_or(id.greedy_tol());
  const Index cap = max_n.value_or(id.max_basis);
  log("greedy: " + std::to_string(X.size()) + " candidates, tol " + fmt(t));
  const BasisSelection b = p_greedy(id.kernel, X, t, cap);
  log("greedy: selected " + std::to_string(b.size()) + " centers");

  nlohmann::json centers = nlohmann::json::array();
  for (Index i = 0; i < b.size(); ++i) {
    const auto p = b.centers.point(i);
    centers.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  const nlohmann::json basis{{"provenance", provenance_json(ctx.provenance)},
                             {"kernel", id.kernel},
                             {"tol", t},
                             {"max_n", cap},
                             {"candidate_count", X.size()},
                             {"size", b.size()},
                             {"stop", stop_name(b.stop)},
                             {"final_max_power", b.final_max_power},
                             {"centers", centers},
                             {"center_indices", b.center_indices},
                             {"max_power_history", b.max_power_history}};
  write_json(ctx.out / "basis.json", basis);

  std::string csv = csv_provenance_line(ctx.provenance) + "\nn,max_power\n";
  for (std::size_t j = 0; j < b.max_power_history.size(); ++j) {
    csv += std::to_string(j + 1) + "," + fmt(b.max_power_history[j]) + "\n";
  }
  write_text(ctx.out / "decay.csv", csv);
  out << nlohmann::json{{"size", b.size()}, {"stop", stop_name(b.stop)}, {"final_max_power", b.final_max_power}}.dump()
      << '\n';
  return 0;
}

int cmd_samples(const Common& c, bool out_given, std::optional<double> eps, std::optional<double> beta, int dim,
                std::ostream& out) {
  const Context ctx = prepare(c);
  const double e = eps.value_or(ctx.config.identify.eps);
  const double b = beta.value_or(ctx.config.identify.beta);
  const std::int64_t n_bisect = min_samples_bisect(e, b, dim);
  const std::int64_t n_bound = min_samples_bound(e, b, dim - 1);
  const nlohmann::json j{{"eps", e},
                         {"beta", b},
                         {"decision_dim", dim},
                         {"N_bisection", n_bisect},
                         {"N_closed_form", n_bound},
                         {"tail_at_N_bisection", binomial_tail(n_bisect, dim - 1, e)},
                         {"provenance", provenance_json(ctx.provenance)}};
  if (out_given) write_json(ctx.out / "samples.json", j);
  out << j.dump() << '\n';
  return 0;
}

TubeModel identify_stage(const Context& ctx, const Log& log) {
  log("identify: start");
  TubeModel model = identify(ctx.config.identify);
  log("identify: n = " + std::to_string(model.basis_size()) + ", N = " + std::to_string(model.N) + ", gamma = (" +
      fmt(model.gammas[0]) + ", " + fmt(model.gammas[1]) + ")");
  write_model(ctx.out / "model.json", model, ctx.provenance);
  const Dataset train =
      sample_dataset(model.N, ctx.config.identify.sim, ctx.config.identify.seeds.training, Stream::Training);
  write_dataset_csv(ctx.out / "training.csv", train, ctx.provenance);
  return model;
}

nlohmann::json model_summary(const TubeModel& m) {
  return nlohmann::json{{"basis_size", m.basis_size()},
                        {"N", m.N},
                        {"gammas", {m.gammas[0], m.gammas[1]}},
                        {"rkhs_norms", {m.programs[0].rkhs_norm, m.programs[1].rkhs_norm}},
                        {"status", {status_name(m.programs[0].status), status_name(m.programs[1].status)}}};
}

int cmd_identify(const Common& c, std::ostream& out, const Log& log) {
  const Context ctx = prepare(c);
  const TubeModel model = identify_stage(ctx, log);
  out << model_summary(model).dump() << '\n';
  return 0;
}

int cmd_validate(const Common& c, const std::string& model_path, std::optional<Index> samples, std::ostream& out,
                 const Log& log) {
  const Context ctx = prepare(c);
  const fs::path mp = model_path.empty() ? ctx.out / "model.json" : fs::path(model_path);
  const TubeModel model = load_model(mp);
  const bool from_config = !c.config_path.empty() || c.seed_override.has_value();
  const SimConfig sim = from_config ? ctx.config.identify.sim : model.sim;
  const std::uint64_t seed = from_config ? ctx.config.identify.seeds.validation : model.seeds.validation;
  const Index M = samples.value_or(ctx.config.validation_samples);
  log("validate: " + std::to_string(M) + " samples");
  const ValidationReport v = validate(model, M, sim, seed);
  auto j = validation_json(v, M);
  j["provenance"] = provenance_json(ctx.provenance);
  write_json(ctx.out / "validation.json", j);
  out << j.dump() << '\n';
  return 0;
}

int cmd_plan(const Common& c, const std::string& model_path, std::ostream& out, const Log& log) {
  const Context ctx = prepare(c);
  const fs::path mp = model_path.empty() ? ctx.out / "model.json" : fs::path(model_path);
  const TubeModel model = load_model(mp);
  log("plan: start");
  const PlanOutcome p = run_plan_stage(model, ctx.config.plan, ctx.config.identify.seeds.planning);
  log("plan: done");
  write_plan_artifacts(ctx, model, p);
  out << nlohmann::json{{"tube_collisions", p.monte_carlo.tube_collisions},
                        {"worst_terminal_error", p.monte_carlo.worst_terminal_error},
                        {"nominal_feasible", p.nominal.feasible}}
             .dump()
      << '\n';
  return 0;
}

int cmd_decay(const Common& c, int dim, double lo, double hi, Index candidates, Index steps,
              const std::string& model_name, std::ostream& out) {
  const Context ctx = prepare(c);
  require(dim >= 1, "--dim: must be >= 1");
  require(lo < hi, "--lo/--hi: need lo < hi");
  require(model_name == "algebraic" || model_name == "exponential", "--model: expected algebraic or exponential");
  const KernelSpec& kernel = ctx.config.identify.kernel;
  Box box;
  box.lower = Vec3::Constant(lo);
  box.upper = Vec3::Constant(hi);
  Matrix pts(candidates, dim);
  for (Index i = 0; i < candidates; ++i) {
    SplitMix64 g = make_stream(ctx.config.identify.seeds.candidates, Stream::Synthetic, static_cast<std::uint64_t>(i));
    for (Index a = 0; a < dim; ++a) pts(i, a) = uniform(g, lo, hi);
  }
  const BasisSelection b = p_greedy(kernel, PointSet(std::move(pts)), std::numeric_limits<double>::min(), steps);
  const DecayModel dm = model_name == "algebraic" ? DecayModel::Algebraic : DecayModel::Exponential;
  const auto nu = kernel.smoothness();
  const DecayReport r = decay_fit(b.max_power_history, dm, dim, nu);
  nlohmann::json j{{"model", model_name},
                   {"dim", dim},
                   {"steps", b.size()},
                   {"fitted_slope", r.fitted_slope},
                   {"fit_r2", r.fit_r2},
                   {"points_used", r.points_used},
                   {"provenance", provenance_json(ctx.provenance)}};
  j["theoretical_exponent"] = std::isnan(r.theoretical_exponent) ? nlohmann::json(nullptr)
                                                                  : nlohmann::json(r.theoretical_exponent);
  if (r.exp_fit) j["exponential"] = {{"rate", r.exp_fit->rate}, {"prefactor", r.exp_fit->prefactor}};
  write_json(ctx.out / "decay.json", j);
  std::string csv = csv_provenance_line(ctx.provenance) + "\nn,max_power\n";
  for (std::size_t k = 0; k < b.max_power_history.size(); ++k) {
    csv += std::to_string(k + 1) + "," + fmt(b.max_power_history[k]) + "\n";
  }
  write_text(ctx.out / "decay.csv", csv);
  out << j.dump() << '\n';
  return 0;
}

int cmd_repro(const Common& c, std::ostream& out, const Log& log) {
  const Context ctx = prepare(c);
  const TubeModel model = identify_stage(ctx, log);
  const Index M = ctx.config.validation_samples;
  log("validate: " + std::to_string(M) + " samples");
  const ValidationReport v = validate(model, M, ctx.config.identify.sim, ctx.config.identify.seeds.validation);
  auto vj = validation_json(v, M);
  vj["provenance"] = provenance_json(ctx.provenance);
  write_json(ctx.out / "validation.json", vj);
  log("plan: start");
  const PlanOutcome p = run_plan_stage(model, ctx.config.plan, ctx.config.identify.seeds.planning);
  log("plan: done");
  write_plan_artifacts(ctx, model, p);

  nlohmann::json summary{{"provenance", provenance_json(ctx.provenance)},
                         {"config", ctx.config},
                         {"model", model_summary(model)},
                         {"validation", validation_json(v, M)},
                         {"comparison", reference_comparison(model, v, &p, ctx.config)}};
  write_json(ctx.out / "summary.json", summary);
  out << summary.at("comparison").dump(2) << '\n';
  return 0;
}

void emit_error(std::ostream& err, const char* kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

PlanOutcome run_plan_stage(const TubeModel& model, const PlanConfig& config, std::uint64_t seed) {
  PlanOutcome p;
  p.nominal = plan(model, config, config.x0, seed, 0);
  PlanConfig free = config;
  free.avoid_obstacle = false;
  p.unconstrained = plan(model, free, config.x0, seed, 1);
  p.monte_carlo = run_rollouts(model, config, model.sim, seed);
  return p;
}

void write_model(const fs::path& path, const TubeModel& model, const Provenance& prov) {
  nlohmann::json j = model;
  j["provenance"] = provenance_json(prov);
  write_json(path, j);
}

void write_trajectory_csv(const fs::path& path, const Plan& plan, const Provenance& prov) {
  std::string csv = csv_provenance_line(prov) + "\nstep,x1,x2,u,hw1,hw2\n";
  for (std::size_t k = 0; k < plan.nominal.size(); ++k) {
    const Vec2 hw = plan.tube[k].half_width();
    csv += std::to_string(k) + "," + fmt(plan.nominal[k][0]) + "," + fmt(plan.nominal[k][1]) + "," +
           (k < plan.controls.size() ? fmt(plan.controls[k]) : std::string()) + "," + fmt(hw[0]) + "," + fmt(hw[1]) +
           "\n";
  }
  write_text(path, csv);
}

void write_dataset_csv(const fs::path& path, const Dataset& data, const Provenance& prov) {
  std::string csv = csv_provenance_line(prov) + "\nx1,x2,u,y1,y2\n";
  for (Index i = 0; i < data.size(); ++i) {
    csv += fmt(data.inputs(i, 0)) + "," + fmt(data.inputs(i, 1)) + "," + fmt(data.inputs(i, 2)) + "," +
           fmt(data.outputs(i, 0)) + "," + fmt(data.outputs(i, 1)) + "\n";
  }
  write_text(path, csv);
  fs::path meta = path;
  meta.replace_extension(".meta.json");
  write_json(meta, nlohmann::json{{"rows", data.size()},
                                  {"seed", data.seed},
                                  {"stream", stream_name(data.stream)},
                                  {"sim", data.config},
                                  {"provenance", provenance_json(prov)}});
}

PointSet read_points_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "--input: cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      require(rows.empty(), "--input: non-numeric value on line " + std::to_string(line_no));
      continue;  // header
    }
    require(rows.empty() || row.size() == rows.front().size(),
            "--input: inconsistent column count on line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "--input: no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t a = 0; a < rows[i].size(); ++a) m(static_cast<Index>(i), static_cast<Index>(a)) = rows[i][a];
  }
  return PointSet(std::move(m));
}

nlohmann::json reference_comparison(const TubeModel& model, const ValidationReport& validation,
                                    const PlanOutcome* plan, const ExperimentConfig& config) {
  nlohmann::json rows = nlohmann::json::array();
  auto row = [&](const std::string& quantity, double value, const nlohmann::json& reference, const std::string& source,
                 const nlohmann::json& pass) {
    rows.push_back(
        {{"quantity", quantity}, {"value", value}, {"reference", reference}, {"source", source}, {"pass", pass}});
  };
  const double n_bisect = static_cast<double>(min_samples_bisect(config.identify.eps, config.identify.beta, 61));
  row("N_bisection(dim=61)", n_bisect, 4200, "published table, +-15% band",
      std::abs(n_bisect - 4200.0) <= 0.15 * 4200.0);
  row("N_closed_form(n=60)", static_cast<double>(min_samples_bound(config.identify.eps, config.identify.beta, 60)),
      5906, "closed form (2/eps)(n + ln 1/beta)", nullptr);
  row("basis_size", static_cast<double>(model.basis_size()), 60, "published table, informational", nullptr);
  row("N", static_cast<double>(model.N), nullptr, "bisection at decision_dim = n + 1", nullptr);
  row("gamma_1", model.gammas[0], 0.057, "published table, band [0.04, 0.12]",
      model.gammas[0] >= 0.04 && model.gammas[0] <= 0.12);
  row("gamma_2", model.gammas[1], 0.068, "published table, band [0.04, 0.12]",
      model.gammas[1] >= 0.04 && model.gammas[1] <= 0.12);
  const double limit = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(validation.samples));
  row("joint_violation", validation.joint_rate, limit, "published risk 2 eps = 0.05 plus 3 standard errors",
      validation.joint_rate <= limit);
  if (plan) {
    row("worst_terminal_error", plan->monte_carlo.worst_terminal_error, 1.0, "qualitative figure claim",
        plan->monte_carlo.worst_terminal_error <= 1.0);
    row("tube_obstacle_intersections", plan->monte_carlo.tube_collisions, 0, "qualitative figure claim",
        plan->monte_carlo.tube_collisions == 0);
  }
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ktube: kernel one-step tube identification and planning"};
  app.require_subcommand(1);
  Common common;

  auto* greedy = app.add_subcommand("greedy", "P-greedy basis selection on a candidate set");
  std::string input;
  std::optional<double> tol;
  std::optional<Index> max_n;
  greedy->add_option("--input", input, "Candidate CSV, one point per row");
  greedy->add_option("--tol", tol, "Stopping value for max P^2");
  greedy->add_option("--max-n", max_n, "Basis size cap");
  add_common(greedy, common);

  auto* samples = app.add_subcommand("samples", "Scenario sample size for (eps, beta, decision dimension)");
  std::optional<double> eps, beta;
  int dim = 0;
  samples->add_option("--eps", eps, "Violation level");
  samples->add_option("--beta", beta, "Confidence parameter");
  samples->add_option("--dim", dim, "Decision dimension")->required()->check(CLI::PositiveNumber);
  add_common(samples, common);

  auto* ident = app.add_subcommand("identify", "Learn the tube model, writes model.json");
  add_common(ident, common);

  auto* valid = app.add_subcommand("validate", "Empirical violation rates of a model");
  std::string model_path;
  std::optional<Index> m_test;
  valid->add_option("--model", model_path, "Model JSON (default <out>/model.json)");
  valid->add_option("--samples", m_test, "Number of fresh samples");
  add_common(valid, common);

  auto* plan_cmd = app.add_subcommand("plan", "Plan around the obstacle and run closed-loop rollouts");
  plan_cmd->add_option("--model", model_path, "Model JSON (default <out>/model.json)");
  add_common(plan_cmd, common);

  auto* decay = app.add_subcommand("decay", "P-greedy decay of the max power function on a cube");
  int decay_dim = 1;
  double lo = -1.0, hi = 1.0;
  Index n_cand = 2000, steps = 100;
  std::string decay_model = "algebraic";
  decay->add_option("--dim", decay_dim, "Input dimension");
  decay->add_option("--lo", lo, "Cube lower bound");
  decay->add_option("--hi", hi, "Cube upper bound");
  decay->add_option("--candidates", n_cand, "Number of random candidates");
  decay->add_option("--steps", steps, "Greedy steps");
  decay->add_option("--model", decay_model, "algebraic or exponential");
  add_common(decay, common);

  auto* repro = app.add_subcommand("repro", "identify, validate and plan, then compare against the reference table");
  add_common(repro, common);

  std::vector<std::string> argv_store{"ktube"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(err, "validation", e.what());
    return 1;
  }

  const Log log(err, common.verbose);
  try {
    if (greedy->parsed()) return cmd_greedy(common, input, tol, max_n, out, log);
    if (samples->parsed()) return cmd_samples(common, samples->count("--out") > 0, eps, beta, dim, out);
    if (ident->parsed()) return cmd_identify(common, out, log);
    if (valid->parsed()) return cmd_validate(common, model_path, m_test, out, log);
    if (plan_cmd->parsed()) return cmd_plan(common, model_path, out, log);
    if (decay->parsed()) return cmd_decay(common, decay_dim, lo, hi, n_cand, steps, decay_model, out);
    if (repro->parsed()) return cmd_repro(common, out, log);
  } catch (const ValidationError& e) {
    emit_error(err, "validation", e.what());
    return 1;
  } catch (const NumericalError& e) {
    emit_error(err, "numerical", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    emit_error(err, "validation", e.what());
    return 1;
  }
  return 1;
}

}  // namespace ktube::cli
