#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "ktube/cli.hpp"

using namespace ktube;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ktube_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Tiny end-to-end experiment: a few seconds for identify + plan.
nlohmann::json small_config() {
  return nlohmann::json{
      {"kernel", {{"family", "matern52"}, {"lengthscale", 3.0}, {"variance", 1.0}}},
      {"candidate_count", 300},
      {"max_basis", 10},
      {"eps", 0.2},
      {"beta", 1e-3},
      {"R", 50.0},
      {"validation_samples", 2000},
      {"plan",
       {{"horizon", 6}, {"population", 12}, {"iters", 2}, {"replan_iters", 1}, {"n_rollouts", 2},
        {"closed_loop_steps", 3}}}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "cfg.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("samples subcommand") {
  const auto r = run({"samples", "--dim", "61"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("N_bisection") == 4200);
  CHECK(j.at("N_closed_form") == 5906);
  CHECK(j.at("tail_at_N_bisection").get<double>() <= 1e-6);

  const auto bad = run({"samples", "--dim", "0"});
  CHECK(bad.code == 1);
  CHECK(nlohmann::json::parse(bad.err).at("error") == "validation");
  CHECK(run({"samples"}).code == 1);
  CHECK(run({"samples", "--dim", "5", "--eps", "2"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("malformed configurations name the offending field") {
  const fs::path dir = scratch("badcfg");
  auto j = small_config();
  j["tua"] = 0.1;
  auto r = run({"identify", "--config", write_config(dir, j).string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("tua") != std::string::npos);

  j = small_config();
  j["R"] = "large";
  r = run({"identify", "--config", write_config(dir, j).string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("R") != std::string::npos);

  j = small_config();
  j["plan"]["horizon"] = -3;
  r = run({"identify", "--config", write_config(dir, j).string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("plan.horizon") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{ not json";
  r = run({"identify", "--config", (dir / "broken.json").string(), "--out", dir.string()});
  CHECK(r.code == 1);
  r = run({"identify", "--config", (dir / "missing.json").string(), "--out", dir.string()});
  CHECK(r.code == 1);
  r = run({"validate", "--model", (dir / "missing.json").string(), "--out", dir.string()});
  CHECK(r.code == 1);
}

TEST_CASE("greedy subcommand on a CSV input") {
  const fs::path dir = scratch("greedy");
  {
    std::ofstream f(dir / "pts.csv");
    f << "a,b\n";
    for (int i = 0; i < 40; ++i) f << (i % 7) * 0.3 << "," << (i / 7) * 0.4 << "\n";
  }
  const auto r = run({"greedy", "--input", (dir / "pts.csv").string(), "--max-n", "5", "--tol", "1e-12",
                      "--out", dir.string(), "--threads", "1"});
  REQUIRE(r.code == 0);
  const auto basis = nlohmann::json::parse(slurp(dir / "basis.json"));
  CHECK(basis.at("size") == 5);
  CHECK(basis.at("centers").size() == 5);
  CHECK(basis.at("centers")[0].size() == 2);
  CHECK(extract_provenance(slurp(dir / "decay.csv")).has_value());

  std::ofstream(dir / "ragged.csv") << "1,2\n3\n";
  CHECK(run({"greedy", "--input", (dir / "ragged.csv").string(), "--out", dir.string()}).code == 1);
}

TEST_CASE("decay subcommand") {
  const fs::path dir = scratch("decay");
  const auto r = run({"decay", "--candidates", "500", "--steps", "40", "--out", dir.string(), "--threads", "1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "decay.json"));
  CHECK(j.at("fitted_slope").get<double>() < -1.0);
  CHECK(j.at("theoretical_exponent").get<double>() == doctest::Approx(-2.5));
  CHECK(run({"decay", "--model", "cubic", "--out", dir.string()}).code == 1);
}

TEST_CASE("pipeline subcommands, provenance and determinism") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b"), c = scratch("repro_c");
  const fs::path cfg = write_config(a, small_config());
  const auto ra = run({"repro", "--config", cfg.string(), "--out", a.string(), "--threads", "1"});
  REQUIRE(ra.code == 0);
  const auto rb = run({"repro", "--config", cfg.string(), "--out", b.string(), "--threads", "1"});
  REQUIRE(rb.code == 0);
  const auto rc = run({"repro", "--config", cfg.string(), "--out", c.string(), "--threads", "3"});
  REQUIRE(rc.code == 0);

  for (const char* f : {"model.json", "trajectory.csv", "rollouts.csv", "validation.json", "plan.json",
                        "summary.json", "training.csv", "trajectories.svg"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    CHECK_MESSAGE(slurp(a / f) == slurp(c / f), f);
  }

  const auto config_json = load_config(cfg);
  const Provenance expected = make_provenance(nlohmann::json(config_json), config_json.identify.seeds);
  for (const char* f : {"model.json", "trajectory.csv", "rollouts.csv", "validation.json", "plan.json",
                        "summary.json", "training.csv", "training.meta.json", "trajectories.svg"}) {
    const auto p = extract_provenance(slurp(a / f));
    REQUIRE_MESSAGE(p.has_value(), f);
    CHECK_MESSAGE(*p == expected, f);
  }

  const std::string traj = slurp(a / "trajectory.csv");
  CHECK(traj.find("step,x1,x2,u,hw1,hw2\n") != std::string::npos);
  const std::string svg = slurp(a / "trajectories.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<!-- provenance:") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(summary.at("comparison").is_array());
  CHECK(summary.at("model").at("basis_size") == 10);

  SUBCASE("stages run separately give the same model") {
    const fs::path d = scratch("stages");
    REQUIRE(run({"identify", "--config", cfg.string(), "--out", d.string(), "--threads", "1"}).code == 0);
    CHECK(slurp(d / "model.json") == slurp(a / "model.json"));
    REQUIRE(run({"validate", "--config", cfg.string(), "--out", d.string(), "--threads", "1"}).code == 0);
    CHECK(slurp(d / "validation.json") == slurp(a / "validation.json"));
    REQUIRE(run({"plan", "--config", cfg.string(), "--out", d.string(), "--threads", "1"}).code == 0);
    CHECK(slurp(d / "trajectory.csv") == slurp(a / "trajectory.csv"));
  }

  SUBCASE("seed override changes seeds and provenance") {
    const fs::path d = scratch("override");
    REQUIRE(run({"identify", "--config", cfg.string(), "--out", d.string(), "--seed-override", "100"}).code == 0);
    const auto p = extract_provenance(slurp(d / "model.json"));
    REQUIRE(p.has_value());
    CHECK(p->seeds == Seeds{100, 101, 102, 103});
    CHECK(p->config_hash != expected.config_hash);
    CHECK(slurp(d / "model.json") != slurp(a / "model.json"));
  }
}

TEST_CASE("provenance helpers") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  const nlohmann::json cfg{{"b", 1}, {"a", 2}};
  CHECK(config_hash(cfg).size() == 16);
  CHECK(config_hash(cfg) == config_hash(nlohmann::json::parse(R"({"a":2,"b":1})")));
  CHECK(config_hash(cfg) != config_hash(nlohmann::json{{"a", 3}}));
  const Provenance p = make_provenance(cfg, Seeds{5, 6, 7, 8});
  CHECK(extract_provenance(csv_provenance_line(p) + "\nx\n1\n") == p);
  CHECK(extract_provenance("<svg>\n" + svg_provenance_comment(p) + "\n</svg>") == p);
  CHECK(extract_provenance(nlohmann::json{{"provenance", provenance_json(p)}}.dump()) == p);
  CHECK_FALSE(extract_provenance("plain text").has_value());
}
