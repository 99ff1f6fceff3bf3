#include "switchstab/pso.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "switchstab/error.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/random.hpp"
#include "switchstab/sobol_sequence.hpp"

namespace switchstab {

void PsoConfig::validate(int dimension) const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (swarm_size < 2) fail("swarm_size must be at least 2");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (!(w_end > 0 && w_end <= w_start && w_start < 1.5)) fail("need 0 < w_end <= w_start < 1.5");
  if (!(c1 > 0 && c2 > 0)) fail("c1 and c2 must be positive");
  if (!(v_max_fraction > 0 && v_max_fraction <= 1)) fail("v_max_fraction must lie in (0, 1]");
  if (stall_window < 1) fail("stall_window must be positive");
  if (!subset_mask.empty()) {
    if (static_cast<int>(subset_mask.size()) != dimension) fail("subset_mask length differs from the space");
    if (std::none_of(subset_mask.begin(), subset_mask.end(), [](bool b) { return b; }))
      fail("subset_mask selects no parameter");
  }
  if (baseline.size() != 0 && baseline.size() != dimension) fail("baseline length differs from the space");
}

PsoResult pso_optimize(const ParameterSpace& space, const FitnessFn& fitness, const PsoConfig& cfg) {
  space.validate(false);
  const int k = space.dimension();
  cfg.validate(k);

  std::vector<int> varied;
  for (int i = 0; i < k; ++i)
    if (cfg.subset_mask.empty() || cfg.subset_mask[i]) varied.push_back(i);
  const int kv = static_cast<int>(varied.size());
  const int n = cfg.swarm_size;

  Eigen::VectorXd base = cfg.baseline.size() == k ? cfg.baseline : Eigen::VectorXd(0.5 * (space.lows + space.highs));
  base = base.cwiseMax(space.lows).cwiseMin(space.highs);
  Eigen::VectorXd lo(kv);
  Eigen::VectorXd hi(kv);
  for (int j = 0; j < kv; ++j) {
    lo(j) = space.lows(varied[j]);
    hi(j) = space.highs(varied[j]);
  }
  const Eigen::VectorXd v_max = cfg.v_max_fraction * (hi - lo);

  auto full = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x = base;
    for (int j = 0; j < kv; ++j) x(varied[j]) = z(j);
    return x;
  };

  // Skip the origin so no particle starts on the lower corner.
  const Eigen::MatrixXd unit = sobol_sequence(kv, n, 1);
  Eigen::MatrixXd pos(kv, n);
  for (int p = 0; p < n; ++p) pos.col(p) = lo + (hi - lo).cwiseProduct(unit.row(p).transpose());
  Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(kv, n);

  PsoResult res;
  auto evaluate = [&]() {
    auto f = parallel_map<double>(n, cfg.jobs, [&](std::size_t p) { return fitness(full(pos.col(p))); });
    res.evaluations += n;
    return f;
  };

  std::vector<double> f = evaluate();
  Eigen::MatrixXd pbest = pos;
  std::vector<double> pbest_f = f;
  int g = 0;
  for (int p = 1; p < n; ++p)
    if (f[p] > f[g]) g = p;
  Eigen::VectorXd gbest = pos.col(g);
  double gbest_f = f[g];
  res.history.push_back(gbest_f);
  res.history_evaluations.push_back(res.evaluations);

  Rng rng(cfg.seed);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double w = cfg.max_iters == 1
                         ? cfg.w_start
                         : cfg.w_start + (cfg.w_end - cfg.w_start) * (it - 1) / static_cast<double>(cfg.max_iters - 1);
    for (int p = 0; p < n; ++p) {
      for (int j = 0; j < kv; ++j) {
        const double r1 = uniform01(rng);
        const double r2 = uniform01(rng);
        double v = w * vel(j, p) + cfg.c1 * r1 * (pbest(j, p) - pos(j, p)) + cfg.c2 * r2 * (gbest(j) - pos(j, p));
        v = std::clamp(v, -v_max(j), v_max(j));
        double z = pos(j, p) + v;
        if (z < lo(j) || z > hi(j)) {
          z = std::clamp(z, lo(j), hi(j));
          v = 0.0;
        }
        pos(j, p) = z;
        vel(j, p) = v;
      }
    }
    f = evaluate();
    for (int p = 0; p < n; ++p) {
      if (f[p] > pbest_f[p]) {
        pbest_f[p] = f[p];
        pbest.col(p) = pos.col(p);
      }
      if (f[p] > gbest_f) {
        gbest_f = f[p];
        gbest = pos.col(p);
      }
    }
    res.history.push_back(gbest_f);
    res.history_evaluations.push_back(res.evaluations);
    res.iterations = it;
    const auto h = res.history.size();
    if (static_cast<int>(h) > cfg.stall_window &&
        res.history[h - 1] - res.history[h - 1 - cfg.stall_window] < cfg.stall_tolerance)
      break;
  }
  res.best_position = full(gbest);
  res.best_fitness = gbest_f;
  return res;
}

FitnessFn penalized(ScalarModel model, double penalty) {
  return [model = std::move(model), penalty](const Eigen::VectorXd& z) {
    const auto v = model(z);
    return v && std::isfinite(*v) ? *v : penalty;
  };
}

std::int64_t evaluations_to_reach(const PsoResult& result, double level) {
  for (std::size_t i = 0; i < result.history.size(); ++i)
    if (result.history[i] >= level) return result.history_evaluations[i];
  return -1;
}

}  // namespace switchstab
