#include <doctest.h>

#include "switchstab/error.hpp"
#include "switchstab/pso.hpp"

using namespace switchstab;

namespace {

ParameterSpace cube(int k, double lo, double hi) {
  ParameterSpace s;
  for (int i = 0; i < k; ++i) s.names.push_back("z" + std::to_string(i));
  s.lows = Eigen::VectorXd::Constant(k, lo);
  s.highs = Eigen::VectorXd::Constant(k, hi);
  return s;
}

Eigen::VectorXd sphere_center() {
  Eigen::VectorXd z0(8);
  z0 << 1.3, -2.1, 0.4, 3.3, -4.2, 0.0, 2.7, -0.9;
  return z0;
}

}  // namespace

TEST_SUITE("pso") {
  TEST_CASE("sphere") {
    const auto z0 = sphere_center();
    const auto space = cube(8, -5, 5);
    for (std::uint64_t seed : {42u, 1u, 2u, 3u}) {
      CAPTURE(seed);
      std::vector<Eigen::VectorXd> seen;
      const FitnessFn f = [&](const Eigen::VectorXd& z) {
        seen.push_back(z);
        return -(z - z0).squaredNorm();
      };
      PsoConfig cfg;
      cfg.max_iters = 200;
      cfg.seed = seed;
      cfg.stall_tolerance = 0.0;  // full iteration budget
      const auto r = pso_optimize(space, f, cfg);
      CHECK(r.iterations == 200);
      CHECK(r.best_fitness >= -1e-4);
      CHECK(r.evaluations == static_cast<std::int64_t>(seen.size()));
      CHECK(r.history.size() == static_cast<std::size_t>(r.iterations) + 1);
      for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
      for (const auto& z : seen) {
        CHECK((z.array() >= -5).all());
        CHECK((z.array() <= 5).all());
      }
    }
  }

  TEST_CASE("stall rule stops on a plateau") {
    const auto z0 = sphere_center();
    PsoConfig cfg;
    cfg.max_iters = 200;
    cfg.seed = 42;
    const auto r = pso_optimize(cube(8, -5, 5), [&](const Eigen::VectorXd& z) { return -(z - z0).squaredNorm(); }, cfg);
    REQUIRE(r.iterations < 200);
    const auto h = r.history.size();
    CHECK(r.history[h - 1] - r.history[h - 1 - cfg.stall_window] < cfg.stall_tolerance);
    for (std::size_t i = cfg.stall_window + 1; i + 1 < h; ++i)
      CHECK(r.history[i] - r.history[i - cfg.stall_window] >= cfg.stall_tolerance);
  }

  TEST_CASE("constant fitness") {
    PsoConfig cfg;
    cfg.seed = 1;
    const auto r = pso_optimize(cube(3, 0, 1), [](const Eigen::VectorXd&) { return 2.5; }, cfg);
    CHECK(r.best_fitness == 2.5);
    for (double h : r.history) CHECK(h == 2.5);
    CHECK(r.iterations == cfg.stall_window);
  }

  TEST_CASE("seed determinism and worker independence") {
    const auto z0 = sphere_center();
    const FitnessFn f = [&](const Eigen::VectorXd& z) { return -(z - z0).squaredNorm(); };
    PsoConfig cfg;
    cfg.seed = 9;
    cfg.max_iters = 40;
    const auto a = pso_optimize(cube(8, -5, 5), f, cfg);
    cfg.jobs = 3;
    const auto b = pso_optimize(cube(8, -5, 5), f, cfg);
    CHECK(a.best_position == b.best_position);
    CHECK(a.history == b.history);
    cfg.seed = 10;
    const auto c = pso_optimize(cube(8, -5, 5), f, cfg);
    CHECK(c.history != a.history);
  }

  TEST_CASE("frozen coordinates stay at the baseline") {
    std::vector<Eigen::VectorXd> seen;
    const FitnessFn f = [&](const Eigen::VectorXd& z) {
      seen.push_back(z);
      return -z.squaredNorm();
    };
    PsoConfig cfg;
    cfg.seed = 3;
    cfg.max_iters = 20;
    cfg.subset_mask = {true, false, true, false};
    cfg.baseline = Eigen::Vector4d(0.5, -1.5, 0.5, 2.0);
    const auto r = pso_optimize(cube(4, -2, 2), f, cfg);
    for (const auto& z : seen) {
      CHECK(z(1) == -1.5);
      CHECK(z(3) == 2.0);
    }
    CHECK(r.best_position(1) == -1.5);
    CHECK(std::abs(r.best_position(0)) < 0.1);
  }

  TEST_CASE("configuration checks") {
    const auto space = cube(2, 0, 1);
    const FitnessFn f = [](const Eigen::VectorXd&) { return 0.0; };
    auto rejects = [&](auto mutate) {
      PsoConfig cfg;
      mutate(cfg);
      CHECK_THROWS_AS(pso_optimize(space, f, cfg), Error);
    };
    rejects([](PsoConfig& c) { c.swarm_size = 1; });
    rejects([](PsoConfig& c) { c.max_iters = 0; });
    rejects([](PsoConfig& c) { c.w_end = 0.95; });
    rejects([](PsoConfig& c) { c.w_start = 1.6; });
    rejects([](PsoConfig& c) { c.c1 = 0; });
    rejects([](PsoConfig& c) { c.v_max_fraction = 1.5; });
    rejects([](PsoConfig& c) { c.subset_mask = {false, false}; });
    rejects([](PsoConfig& c) { c.subset_mask = {true}; });
  }

  TEST_CASE("penalized wrapper and evaluation counter") {
    const ScalarModel m = [](const Eigen::VectorXd& z) -> std::optional<double> {
      if (z(0) < 0) return std::nullopt;
      return z(0);
    };
    const auto f = penalized(m);
    CHECK(f(Eigen::VectorXd::Constant(1, -1.0)) == -50.0);
    CHECK(f(Eigen::VectorXd::Constant(1, 2.0)) == 2.0);

    PsoResult r;
    r.history = {1.0, 2.0, 3.0};
    r.history_evaluations = {10, 20, 30};
    CHECK(evaluations_to_reach(r, 2.0) == 20);
    CHECK(evaluations_to_reach(r, 3.5) == -1);
  }
}
