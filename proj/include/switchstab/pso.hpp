#pragma once

// Bounded particle swarm maximizer.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "switchstab/sensitivity.hpp"

namespace switchstab {

struct PsoConfig {
  int swarm_size = 30;
  int max_iters = 100;
  double w_start = 0.9;
  double w_end = 0.4;
  double c1 = 2.0;
  double c2 = 2.0;
  std::uint64_t seed = 0;
  double v_max_fraction = 0.2;
  /// Varied coordinates; empty means all. Others stay at `baseline`.
  std::vector<bool> subset_mask;
  /// Full-length position used for frozen coordinates (midpoint when empty).
  Eigen::VectorXd baseline;
  /// Stop once the best fitness gains less than this over `stall_window` iterations.
  double stall_tolerance = 1e-6;
  int stall_window = 15;
  int jobs = 1;

  void validate(int dimension) const;
};

using FitnessFn = std::function<double(const Eigen::VectorXd&)>;

struct PsoResult {
  Eigen::VectorXd best_position;
  double best_fitness = 0;
  /// Global best after initialization (entry 0) and after each iteration.
  std::vector<double> history;
  /// Cumulative evaluation count matching each history entry.
  std::vector<std::int64_t> history_evaluations;
  std::int64_t evaluations = 0;
  int iterations = 0;
};

PsoResult pso_optimize(const ParameterSpace& space, const FitnessFn& fitness, const PsoConfig& cfg);

/// Wraps a ScalarModel so invalid evaluations score `penalty`.
FitnessFn penalized(ScalarModel model, double penalty = -50.0);

/// Evaluations needed until the history first reaches `level`; -1 if never.
std::int64_t evaluations_to_reach(const PsoResult& result, double level);

}  // namespace switchstab
