#pragma once

// Common quadratic Lyapunov certificate for the two-mode converter model.
//
// The boundary equilibrium x_e is the convex-combination equilibrium lying on
// the switching surface. Matching the argmin switching rule to the voltage
// threshold pins P up to one free entry p = P(0,0), so P(p) = P0 + p*P1. The
// definiteness conditions on P and on A_i^T P + P A_i + mu P reduce to scalar
// polynomial inequalities in p, which are solved exactly for each trial mu.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "switchstab/linear2.hpp"
#include "switchstab/switched_core.hpp"
#include "switchstab/wtgsc_model.hpp"

namespace switchstab {

struct BoundaryEquilibrium {
  Vec2d x_e = Vec2d::Zero();
  double lambda1 = 0;
  /// Number of sign changes of the surface residual found on [0, 1].
  int root_count = 1;
};

/// Surface residual -1.5 R x_1 + 1.5 omega L x_2 + v_LVRT - v_G.
double surface_residual(const WtGscParams& p, const Vec2d& x);

BoundaryEquilibrium boundary_equilibrium(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2,
                                         const WtGscParams& p);

/// P(p) = P0 + p P1.
struct LyapunovFamily {
  Vec2d d = Vec2d::Zero();
  Mat2d P0 = Mat2d::Zero();
  Mat2d P1 = Mat2d::Zero();

  Mat2d at(double p) const { return P0 + p * P1; }
};

LyapunovFamily lyapunov_family(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2, const Vec2d& x_e,
                               const WtGscParams& p);

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo < x && x < hi; }
};

using IntervalSet = std::vector<Interval>;

/// {p : a p^2 + b p + c > 0}. Coefficients with |a| <= linear_tol are treated
/// as linear.
IntervalSet solve_quadratic_positive(double a, double b, double c, double linear_tol = 0.0);
IntervalSet intersect(const IntervalSet& x, const IntervalSet& y);

struct FeasibilityResult {
  bool feasible = false;
  IntervalSet p_intervals;
  double witness_p = std::numeric_limits<double>::quiet_NaN();
  /// A determinant condition had a vanishing quadratic coefficient.
  bool linear_regime = false;
};

FeasibilityResult feasibility_at_mu(const Mat2d& A1, const Mat2d& A2, const LyapunovFamily& family, double mu);

struct StabilityCertificate {
  Vec2d x_e = Vec2d::Zero();
  double lambda1 = 0;
  double p = 0;
  Mat2d P = Mat2d::Identity();
  double mu = 0;
  bool feasible = false;
  Vec2d d = Vec2d::Zero();
  std::vector<std::string> diagnostics;
};

struct StabilityOptions {
  double relative_tolerance = 1e-6;
  /// Report the largest relaxed mu in [-1e3, 0) for infeasible groups.
  bool report_negative = true;
};

StabilityCertificate max_stability_index(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2,
                                         const WtGscParams& p, const StabilityOptions& opts = {});

/// Builds both subsystems from the parameters first.
StabilityCertificate max_stability_index(const WtGscParams& p, const StabilityOptions& opts = {});

/// Stability index for sampling studies; empty when the model cannot be built
/// or the criterion is inapplicable.
std::optional<double> stability_index_or_invalid(const WtGscParams& p);

/// b_i = A_i x_e + B_i u_i for each subsystem.
std::vector<Vec2d> shifted_drives(const SwitchedSystemd& system, const Vec2d& x_e);

/// Argmin-law system built from a certificate (same subsystems and output map).
SwitchedSystemd argmin_system(const SwitchedSystemd& system, const StabilityCertificate& cert);

struct AuditOptions {
  int starts = 20;
  std::uint64_t seed = 2024;
  /// Starting states are drawn uniformly from the disc of this radius.
  double start_radius = 1.2;
  double t_end = 2.0;
  double dt = 1e-4;
  double argmin_tolerance = 1e-3;
  double threshold_tolerance = 1e-2;
};

struct AuditStart {
  Vec2d x0 = Vec2d::Zero();
  double argmin_error = 0;
  bool argmin_monotone = true;
  double threshold_error = 0;
  bool threshold_converged = false;
};

struct AuditReport {
  double combination_residual = 0;
  double min_eig_P = 0;
  double max_eig_M1 = 0;
  double max_eig_M2 = 0;
  std::vector<AuditStart> starts;
  int threshold_converged = 0;
};

/// Checks (a) the combination residual at x_e, (b) definiteness of P and of
/// both A_i^T P + P A_i + mu P, and (c) convergence with monotone V under the
/// argmin law; throws AuditFailure naming the failed stage. Convergence under
/// the threshold law is only reported.
AuditReport audit_certificate(const StabilityCertificate& cert, const SwitchedSystemd& system,
                              const AuditOptions& opts = {});

/// Deterministic starting states uniform in a disc of the given radius.
std::vector<Vec2d> random_starts(int count, double radius, std::uint64_t seed);

}  // namespace switchstab
