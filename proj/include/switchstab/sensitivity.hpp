#pragma once

// Variance-based (Sobol') sensitivity of a scalar model over a box of
// parameters, estimated with the Saltelli A/B/AB design.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switchstab/wtgsc_model.hpp"

namespace switchstab {

struct ParameterSpace {
  std::vector<std::string> names;
  Eigen::VectorXd lows;
  Eigen::VectorXd highs;
  /// Non-varied parameters pinned to fixed values.
  std::map<std::string, double> frozen;

  int dimension() const { return static_cast<int>(names.size()); }
  /// Throws InvalidArgument on empty, duplicate or inverted entries. With
  /// `require_model_names` every name must be a WtGscParams field.
  void validate(bool require_model_names = true) const;
  /// Maps a point of the unit cube onto the box.
  Eigen::VectorXd scale(const Eigen::VectorXd& unit) const;
};

/// Empty result marks an invalid evaluation.
using ScalarModel = std::function<std::optional<double>(const Eigen::VectorXd&)>;

struct SaltelliDesign {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> AB;
};

SaltelliDesign saltelli_matrices(const ParameterSpace& space, int M, std::int64_t skip = 0);

enum class InvalidPolicy { Penalize, ExcludeRow };

struct SobolOptions {
  InvalidPolicy policy = InvalidPolicy::Penalize;
  double penalty = -50.0;
  std::int64_t skip = 0;
  int bootstrap_resamples = 100;
  std::uint64_t bootstrap_seed = 0;
  int jobs = 1;
};

struct SobolResult {
  Eigen::VectorXd S;
  Eigen::VectorXd S_T;
  Eigen::VectorXd S_stderr;
  Eigen::VectorXd ST_stderr;
  double variance = 0;
  int M = 0;
  std::int64_t evaluations = 0;
  std::int64_t invalid_count = 0;
  /// Rows kept by the estimator (M unless rows were excluded).
  int rows_used = 0;
};

/// Indices from already evaluated design outputs; gAB holds one column per
/// parameter. Rows with any non-finite entry must be removed beforehand.
void point_estimates(const Eigen::VectorXd& gA, const Eigen::VectorXd& gB, const Eigen::MatrixXd& gAB,
                     Eigen::VectorXd& S, Eigen::VectorXd& S_T, double& variance);

SobolResult estimate_indices(const ParameterSpace& space, const ScalarModel& model, int M,
                             const SobolOptions& opts = {});

/// WT-GSC parameters at a point of the space: base, then frozen, then the point.
WtGscParams params_at(const ParameterSpace& space, const WtGscParams& base, const Eigen::VectorXd& z,
                      std::optional<double> target_normal_voltage);

/// Stability index of the WT-GSC model as a ScalarModel.
ScalarModel stability_model(const ParameterSpace& space, const WtGscParams& base,
                            std::optional<double> target_normal_voltage);

}  // namespace switchstab
