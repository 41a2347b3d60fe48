#include "ktube/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "ktube/parallel.hpp"

namespace ktube {

std::string_view wiring_name(ToleranceWiring w) {
  return w == ToleranceWiring::ScaledSquared ? "scaled_squared" : "tau";
}

ToleranceWiring wiring_from_name(std::string_view name) {
  if (name == "scaled_squared") return ToleranceWiring::ScaledSquared;
  if (name == "tau") return ToleranceWiring::Tau;
  throw ValidationError("greedy_wiring: expected 'scaled_squared' or 'tau', got '" + std::string(name) + "'");
}

void Seeds::validate() const {
  const std::array<std::uint64_t, 4> all{candidates, training, validation, planning};
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      require(all[i] != all[j], "seeds: candidate/training/validation/planning seeds must be pairwise distinct");
    }
  }
}

void to_json(nlohmann::json& j, const Seeds& s) {
  j = nlohmann::json{{"candidates", s.candidates},
                     {"training", s.training},
                     {"validation", s.validation},
                     {"planning", s.planning}};
}

void from_json(const nlohmann::json& j, Seeds& s) {
  require(j.is_object(), "seeds: expected an object");
  for (const char* key : {"candidates", "training", "validation", "planning"}) {
    require(j.contains(key) && j.at(key).is_number_unsigned(), std::string("seeds.") + key + ": missing or not a u64");
  }
  s.candidates = j.at("candidates").get<std::uint64_t>();
  s.training = j.at("training").get<std::uint64_t>();
  s.validation = j.at("validation").get<std::uint64_t>();
  s.planning = j.at("planning").get<std::uint64_t>();
  s.validate();
}

void IdentifyConfig::validate() const {
  kernel.validate();
  sim.validate();
  require(std::isfinite(tau) && tau > 0, "tau: must be positive");
  require(std::isfinite(R) && R > 0, "R: must be positive");
  require(eps > 0 && eps < 1, "eps: must lie in (0, 1)");
  require(beta > 0 && beta < 1, "beta: must lie in (0, 1)");
  require(candidate_count >= 1, "candidate_count: must be >= 1");
  require(max_basis >= 1, "max_basis: must be >= 1");
  seeds.validate();
}

double IdentifyConfig::greedy_tol() const {
  if (wiring == ToleranceWiring::Tau) return tau;
  const double r = tau / R;
  return r * r;
}

ProgramReport solve_output(const Matrix& gram_factor, const Matrix& features, const Vector& targets, double R,
                           const IpmOptions& solver, Vector& alpha_out, double& gamma_out) {
  ScenarioProgram program{gram_factor, features, targets, R};
  const IpmSolution sol = solve_ipm(program, solver);
  ProgramReport rep;
  rep.status = sol.status;
  rep.kkt_residual = sol.kkt_residual;
  rep.iterations = sol.iterations;
  rep.active_count = sol.active_count;
  rep.rkhs_norm = (gram_factor.transpose() * sol.alpha).norm();
  rep.max_residual = residuals(sol, program).cwiseAbs().maxCoeff();
  alpha_out = sol.alpha;
  gamma_out = sol.gamma;
  return rep;
}

TubeModel identify(const IdentifyConfig& config) {
  config.validate();
  // Distinct (seed, stream) pairs for the greedy candidates and the training set.
  const PointSet candidates =
      sample_inputs(config.candidate_count, config.sim.domain, config.seeds.candidates, Stream::Candidates);
  const BasisSelection basis = p_greedy(config.kernel, candidates, config.greedy_tol(), config.max_basis);
  const Index n = basis.size();
  if (n == 0) throw NumericalError("identify: greedy selected no centers (tolerance above kernel variance?)");

  const int decision_dim = static_cast<int>(n) + 1;
  const std::int64_t N = min_samples_bisect(config.eps, config.beta, decision_dim);
  const Dataset train = sample_dataset(N, config.sim, config.seeds.training, Stream::Training);

  const Matrix K = gram(config.kernel, basis.centers, 0.0);
  const Matrix L = cholesky_with_jitter(K, config.kernel.default_jitter(), 1e-4 * config.kernel.variance).lower;
  const Matrix F = cross_matrix(config.kernel, PointSet(train.inputs), basis.centers);

  TubeModel model;
  model.kernel = config.kernel;
  model.centers = basis.centers;
  model.R = config.R;
  model.tau = config.tau;
  model.wiring = config.wiring;
  model.N = N;
  model.decision_dim = decision_dim;
  model.seeds = config.seeds;
  model.sim = config.sim;
  model.greedy = GreedyReport{config.greedy_tol(), config.candidate_count, basis.stop, basis.final_max_power,
                              basis.max_power_history};

  auto solve = [&](int l) {
    const Vector y = train.outputs.col(l);
    return solve_output(L, F, y, config.R, config.solver, model.alphas[static_cast<std::size_t>(l)],
                        model.gammas[static_cast<std::size_t>(l)]);
  };
  if (parallel::threads() > 1) {
    auto second = std::async(std::launch::async, solve, 1);
    model.programs[0] = solve(0);
    model.programs[1] = second.get();
  } else {
    model.programs[0] = solve(0);
    model.programs[1] = solve(1);
  }
  for (auto& p : model.programs) p.certificate = certify(config.eps, config.beta, decision_dim, N);
  const std::array<ScenarioCertificate, 2> certs{model.programs[0].certificate, model.programs[1].certificate};
  model.joint = union_bound(certs);
  for (const auto& p : model.programs) {
    if (p.status == SolveStatus::InfeasibleNumerics) throw NumericalError("identify: scenario program solve failed");
  }
  return model;
}

Prediction predict(const TubeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  require(z.size() == model.centers.dim(), "predict: query dimension mismatch");
  const Vector k = cross(model.kernel, model.centers, z);
  Prediction p;
  p.mean = Vec2(model.alphas[0].dot(k), model.alphas[1].dot(k));
  p.tube = Vec2(model.gammas[0], model.gammas[1]);
  double nearest = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < model.centers.size(); ++i) nearest = std::min(nearest, distance(model.centers.point(i), z));
  p.extrapolated = nearest > 2.0 * model.kernel.lengthscale;
  return p;
}

Vec2 predict_mean(const TubeModel& model, const Vec2& x, double u) {
  const Matrix& C = model.centers.coords();
  const Eigen::ArrayXd r =
      ((C.col(0).array() - x[0]).square() + (C.col(1).array() - x[1]).square() + (C.col(2).array() - u).square())
          .sqrt() /
      model.kernel.lengthscale;
  const Eigen::ArrayXd k = eval_radial(model.kernel, r);
  return {(model.alphas[0].array() * k).sum(), (model.alphas[1].array() * k).sum()};
}

ValidationReport validate(const TubeModel& model, Index M_test, const SimConfig& sim, std::uint64_t seed) {
  require(M_test >= 1, "validate: M_test must be >= 1");
  require(seed != model.seeds.training, "validate: validation seed must differ from the training seed");
  const Dataset test = sample_dataset(M_test, sim, seed, Stream::Validation);
  std::vector<unsigned char> v0(static_cast<std::size_t>(M_test)), v1(static_cast<std::size_t>(M_test));
  parallel::for_each_index(0, static_cast<std::size_t>(M_test), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    const Vec2 yhat = predict_mean(model, Vec2(test.inputs(i, 0), test.inputs(i, 1)), test.inputs(i, 2));
    v0[ii] = std::abs(test.outputs(i, 0) - yhat[0]) > model.gammas[0];
    v1[ii] = std::abs(test.outputs(i, 1) - yhat[1]) > model.gammas[1];
  });
  Index c0 = 0, c1 = 0, cj = 0;
  for (std::size_t i = 0; i < v0.size(); ++i) {
    c0 += v0[i];
    c1 += v1[i];
    cj += (v0[i] || v1[i]);
  }
  ValidationReport rep;
  rep.samples = M_test;
  rep.seed = seed;
  const auto m = static_cast<double>(M_test);
  rep.rates = {static_cast<double>(c0) / m, static_cast<double>(c1) / m};
  rep.joint_rate = static_cast<double>(cj) / m;
  return rep;
}

bool Rect::contains(const Vec2& p, double slack) const {
  return (p.array() >= lo.array() - slack).all() && (p.array() <= hi.array() + slack).all();
}

bool Rect::contains(const Rect& r, double slack) const { return contains(r.lo, slack) && contains(r.hi, slack); }

std::array<Vec2, 4> Rect::corners() const {
  return {Vec2(lo[0], lo[1]), Vec2(hi[0], lo[1]), Vec2(hi[0], hi[1]), Vec2(lo[0], hi[1])};
}

std::vector<Rect> propagate_corners(const TubeModel& model, const Vec2& x0, std::span<const double> u_seq) {
  std::vector<Rect> rects;
  rects.reserve(u_seq.size() + 1);
  rects.push_back(Rect{x0, x0});
  const Vec2 tube(model.gammas[0], model.gammas[1]);
  for (double u : u_seq) {
    const Rect& prev = rects.back();
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    const bool point = (prev.lo.array() == prev.hi.array()).all();
    const auto corners = prev.corners();
    for (std::size_t c = 0; c < (point ? 1u : 4u); ++c) {
      const Vec2 y = predict_mean(model, corners[c], u);
      lo = lo.cwiseMin(y - tube);
      hi = hi.cwiseMax(y + tube);
    }
    rects.push_back(Rect{lo, hi});
  }
  return rects;
}

namespace {

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

SolveStatus status_from_name(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::MaxIter, SolveStatus::InfeasibleNumerics}) {
    if (status_name(st) == s) return st;
  }
  throw ValidationError("model.programs.status: unknown value '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const TubeModel& m) {
  nlohmann::json programs = nlohmann::json::array();
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& p = m.programs[l];
    programs.push_back({{"alpha", std::vector<double>(m.alphas[l].data(), m.alphas[l].data() + m.alphas[l].size())},
                        {"gamma", m.gammas[l]},
                        {"certificate", p.certificate},
                        {"status", status_name(p.status)},
                        {"kkt_residual", p.kkt_residual},
                        {"iterations", p.iterations},
                        {"active_count", p.active_count},
                        {"rkhs_norm", p.rkhs_norm},
                        {"max_residual", p.max_residual}});
  }
  j = nlohmann::json{
      {"kernel", m.kernel},
      {"centers", matrix_rows(m.centers.coords())},
      {"basis_size", m.basis_size()},
      {"R", m.R},
      {"tau", m.tau},
      {"greedy_wiring", wiring_name(m.wiring)},
      {"N", m.N},
      {"decision_dim", m.decision_dim},
      {"outputs", programs},
      {"gammas", {m.gammas[0], m.gammas[1]}},
      {"joint_certificate", m.joint},
      {"greedy",
       {{"tol", m.greedy.tol},
        {"candidate_count", m.greedy.candidate_count},
        {"stop", stop_name(m.greedy.stop)},
        {"final_max_power", m.greedy.final_max_power},
        {"max_power_history", m.greedy.max_power_history}}},
      {"seeds", m.seeds},
      {"sim", m.sim},
  };
}

void from_json(const nlohmann::json& j, TubeModel& m) {
  require(j.is_object(), "model: expected an object");
  try {
    m.kernel = j.at("kernel").get<KernelSpec>();
    const auto& rows = j.at("centers");
    Matrix c(static_cast<Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == 3, "model.centers: each center needs 3 coordinates");
      for (std::size_t a = 0; a < 3; ++a) c(static_cast<Index>(i), static_cast<Index>(a)) = rows[i][a].get<double>();
    }
    m.centers = PointSet(std::move(c));
    m.R = j.at("R").get<double>();
    m.tau = j.at("tau").get<double>();
    m.wiring = wiring_from_name(j.at("greedy_wiring").get<std::string>());
    m.N = j.at("N").get<std::int64_t>();
    m.decision_dim = j.at("decision_dim").get<int>();
    const auto& outs = j.at("outputs");
    require(outs.is_array() && outs.size() == 2, "model.outputs: expected two entries");
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& o = outs[l];
      const auto a = o.at("alpha").get<std::vector<double>>();
      require(static_cast<Index>(a.size()) == m.centers.size(), "model.outputs.alpha: length must equal basis size");
      m.alphas[l] = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
      m.gammas[l] = o.at("gamma").get<double>();
      auto& p = m.programs[l];
      p.certificate = o.at("certificate").get<ScenarioCertificate>();
      p.status = status_from_name(o.at("status").get<std::string>());
      p.kkt_residual = o.at("kkt_residual").get<double>();
      p.iterations = o.at("iterations").get<int>();
      p.active_count = o.at("active_count").get<Index>();
      p.rkhs_norm = o.at("rkhs_norm").get<double>();
      p.max_residual = o.at("max_residual").get<double>();
    }
    m.joint = j.at("joint_certificate").get<JointCertificate>();
    const auto& g = j.at("greedy");
    m.greedy.tol = g.at("tol").get<double>();
    m.greedy.candidate_count = g.at("candidate_count").get<Index>();
    m.greedy.stop = stop_from_name(g.at("stop").get<std::string>());
    m.greedy.final_max_power = g.at("final_max_power").get<double>();
    m.greedy.max_power_history = g.at("max_power_history").get<std::vector<double>>();
    m.seeds = j.at("seeds").get<Seeds>();
    m.sim = j.at("sim").get<SimConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
}

}  // namespace ktube
