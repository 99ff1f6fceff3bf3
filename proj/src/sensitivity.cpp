#include "switchstab/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "switchstab/error.hpp"
#include "switchstab/parallel.hpp"
#include "switchstab/random.hpp"
#include "switchstab/sobol_sequence.hpp"
#include "switchstab/stability.hpp"

namespace switchstab {

void ParameterSpace::validate(bool require_model_names) const {
  const auto k = names.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "parameter space is empty");
  if (static_cast<std::size_t>(lows.size()) != k || static_cast<std::size_t>(highs.size()) != k)
    throw Error(ErrorCode::InvalidArgument, "bounds do not match the parameter names");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < k; ++i) {
    if (!seen.insert(names[i]).second)
      throw Error(ErrorCode::InvalidArgument, fmt::format("parameter '{}' listed twice", names[i]));
    if (require_model_names && !is_parameter_name(names[i]))
      throw Error(ErrorCode::InvalidArgument, fmt::format("unknown parameter '{}'", names[i]));
    if (!(lows(i) < highs(i)))
      throw Error(ErrorCode::InvalidArgument, fmt::format("empty range for '{}'", names[i]));
  }
  for (const auto& [name, value] : frozen) {
    if (require_model_names && !is_parameter_name(name))
      throw Error(ErrorCode::InvalidArgument, fmt::format("unknown frozen parameter '{}'", name));
    if (seen.count(name)) throw Error(ErrorCode::InvalidArgument, fmt::format("'{}' is both varied and frozen", name));
    (void)value;
  }
}

Eigen::VectorXd ParameterSpace::scale(const Eigen::VectorXd& unit) const {
  return lows + (highs - lows).cwiseProduct(unit);
}

SaltelliDesign saltelli_matrices(const ParameterSpace& space, int M, std::int64_t skip) {
  space.validate(false);
  if (M < 1 || (M & (M - 1)) != 0)
    throw Error(ErrorCode::BadSampleCount, fmt::format("M = {} is not a power of two", M));
  const int k = space.dimension();
  const Eigen::MatrixXd block = sobol_sequence(2 * k, M, skip);
  const Eigen::RowVectorXd lo = space.lows.transpose();
  const Eigen::RowVectorXd span = (space.highs - space.lows).transpose();

  SaltelliDesign d;
  d.A = (block.leftCols(k).array().rowwise() * span.array()).rowwise() + lo.array();
  d.B = (block.rightCols(k).array().rowwise() * span.array()).rowwise() + lo.array();
  d.AB.reserve(k);
  for (int i = 0; i < k; ++i) {
    d.AB.push_back(d.A);
    d.AB.back().col(i) = d.B.col(i);
  }
  return d;
}

void point_estimates(const Eigen::VectorXd& gA, const Eigen::VectorXd& gB, const Eigen::MatrixXd& gAB,
                     Eigen::VectorXd& S, Eigen::VectorXd& S_T, double& variance) {
  const auto n = static_cast<double>(gA.size());
  const int k = static_cast<int>(gAB.cols());
  const double mean = (gA.sum() + gB.sum()) / (2.0 * n);
  const Eigen::ArrayXd a = gA.array() - mean;
  const Eigen::ArrayXd b = gB.array() - mean;
  variance = (a.square().sum() + b.square().sum()) / (2.0 * n);

  S = Eigen::VectorXd::Zero(k);
  S_T = Eigen::VectorXd::Zero(k);
  // spread at the level of rounding in the mean counts as a constant output
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(mean);
  if (!(variance > std::max(noise * noise, 1e-300))) {
    variance = 0.0;
    return;
  }
  for (int i = 0; i < k; ++i) {
    const Eigen::ArrayXd ab = gAB.col(i).array() - mean;
    S(i) = (b * (ab - a)).sum() / n / variance;
    S_T(i) = (a - ab).square().sum() / (2.0 * n) / variance;
  }
}

SobolResult estimate_indices(const ParameterSpace& space, const ScalarModel& model, int M,
                             const SobolOptions& opts) {
  if (M < 8) throw Error(ErrorCode::BadSampleCount, fmt::format("M = {} is below 8", M));
  const SaltelliDesign design = saltelli_matrices(space, M, opts.skip);
  const int k = space.dimension();

  // Rows of A, then B, then each AB_i, in that fixed order.
  const auto total = static_cast<std::size_t>(M) * static_cast<std::size_t>(k + 2);
  auto row = [&](std::size_t idx) -> Eigen::VectorXd {
    const auto block = idx / M;
    const auto r = static_cast<Eigen::Index>(idx % M);
    if (block == 0) return design.A.row(r).transpose();
    if (block == 1) return design.B.row(r).transpose();
    return design.AB[block - 2].row(r).transpose();
  };
  const auto values =
      parallel_map<std::optional<double>>(total, opts.jobs, [&](std::size_t idx) { return model(row(idx)); });

  SobolResult res;
  res.M = M;
  res.evaluations = static_cast<std::int64_t>(total);

  auto value_at = [&](std::size_t block, int r) -> std::optional<double> {
    const auto& v = values[block * M + r];
    if (v && std::isfinite(*v)) return v;
    return std::nullopt;
  };
  for (const auto& v : values)
    if (!v || !std::isfinite(*v)) ++res.invalid_count;

  std::vector<int> kept;
  for (int r = 0; r < M; ++r) {
    bool ok = true;
    for (std::size_t b = 0; b < static_cast<std::size_t>(k + 2) && ok; ++b) ok = value_at(b, r).has_value();
    if (ok || opts.policy == InvalidPolicy::Penalize) kept.push_back(r);
  }
  if (kept.empty()) throw Error(ErrorCode::AllInvalid, "no valid rows remain after excluding invalid evaluations");
  res.rows_used = static_cast<int>(kept.size());

  const auto n = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd gA(n);
  Eigen::VectorXd gB(n);
  Eigen::MatrixXd gAB(n, k);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int r = kept[j];
    gA(j) = value_at(0, r).value_or(opts.penalty);
    gB(j) = value_at(1, r).value_or(opts.penalty);
    for (int i = 0; i < k; ++i) gAB(j, i) = value_at(2 + i, r).value_or(opts.penalty);
  }
  point_estimates(gA, gB, gAB, res.S, res.S_T, res.variance);

  res.S_stderr = Eigen::VectorXd::Zero(k);
  res.ST_stderr = Eigen::VectorXd::Zero(k);
  const int R = opts.bootstrap_resamples;
  if (R >= 2) {
    Rng rng(opts.bootstrap_seed);
    Eigen::MatrixXd s_samples(R, k);
    Eigen::MatrixXd st_samples(R, k);
    Eigen::VectorXd bA(n);
    Eigen::VectorXd bB(n);
    Eigen::MatrixXd bAB(n, k);
    for (int rep = 0; rep < R; ++rep) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto pick = std::min<Eigen::Index>(static_cast<Eigen::Index>(uniform01(rng) * n), n - 1);
        bA(j) = gA(pick);
        bB(j) = gB(pick);
        bAB.row(j) = gAB.row(pick);
      }
      Eigen::VectorXd s;
      Eigen::VectorXd st;
      double v = 0;
      point_estimates(bA, bB, bAB, s, st, v);
      s_samples.row(rep) = s.transpose();
      st_samples.row(rep) = st.transpose();
    }
    auto stdev = [R](const Eigen::MatrixXd& m) {
      const Eigen::RowVectorXd mean = m.colwise().mean();
      return Eigen::VectorXd(((m.rowwise() - mean).array().square().colwise().sum() / (R - 1)).sqrt().transpose());
    };
    res.S_stderr = stdev(s_samples);
    res.ST_stderr = stdev(st_samples);
  }
  return res;
}

WtGscParams params_at(const ParameterSpace& space, const WtGscParams& base, const Eigen::VectorXd& z,
                      std::optional<double> target_normal_voltage) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [name, value] : space.frozen) {
    names.push_back(name);
    values.push_back(value);
  }
  for (int i = 0; i < space.dimension(); ++i) {
    names.push_back(space.names[i]);
    values.push_back(z(i));
  }
  return with_overrides(base, names, values, target_normal_voltage);
}

ScalarModel stability_model(const ParameterSpace& space, const WtGscParams& base,
                            std::optional<double> target_normal_voltage) {
  space.validate();
  return [space, base, target_normal_voltage](const Eigen::VectorXd& z) -> std::optional<double> {
    WtGscParams p;
    try {
      p = params_at(space, base, z, target_normal_voltage);
    } catch (const Error&) {
      return std::nullopt;
    }
    return stability_index_or_invalid(p);
  };
}

}  // namespace switchstab
