#include "switchstab/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "switchstab/error.hpp"
#include "switchstab/random.hpp"

namespace switchstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelaxationFloor = -1e3;
constexpr double kMuCap = 1e6;
constexpr int kScanIntervals = 64;

std::optional<Vec2d> combination_equilibrium(const AffineSubsystemd& s1, const AffineSubsystemd& s2, double lam) {
  const Mat2d a = lam * s1.A + (1.0 - lam) * s2.A;
  const Vec2d b = lam * s1.b + (1.0 - lam) * s2.b;
  if (!is_invertible(a)) return std::nullopt;
  return Vec2d(-a.inverse() * b);
}

// Coefficients of det(X0 + p X1) = a p^2 + b p + c for symmetric 2x2 X.
std::array<double, 3> det_coefficients(const Mat2d& x0, const Mat2d& x1) {
  const double a = x1(0, 0) * x1(1, 1) - x1(0, 1) * x1(0, 1);
  const double b = x0(0, 0) * x1(1, 1) + x1(0, 0) * x0(1, 1) - 2.0 * x0(0, 1) * x1(0, 1);
  const double c = x0(0, 0) * x0(1, 1) - x0(0, 1) * x0(0, 1);
  return {a, b, c};
}

struct PositiveDefiniteConditions {
  IntervalSet feasible;
  bool linear_det = false;
};

// {p : X0 + p X1 > 0}, with minors required to exceed a norm-scaled margin.
PositiveDefiniteConditions positive_definite_in_p(const Mat2d& x0, const Mat2d& x1) {
  const double scale = x0.norm() + x1.norm();
  const double eps_entry = 1e-10 * scale;
  const double eps_det = 1e-10 * scale * scale;

  PositiveDefiniteConditions out;
  const IntervalSet entry = solve_quadratic_positive(0.0, x1(0, 0), x0(0, 0) - eps_entry);
  auto [a, b, c] = det_coefficients(x0, x1);
  const double linear_tol = 1e-12 * (std::abs(b) + std::abs(c - eps_det));
  out.linear_det = std::abs(a) <= linear_tol;
  out.feasible = intersect(entry, solve_quadratic_positive(a, b, c - eps_det, linear_tol));
  return out;
}

}  // namespace

double surface_residual(const WtGscParams& p, const Vec2d& x) {
  return -1.5 * p.R * x(0) + 1.5 * p.omega * p.L * x(1) + p.v_LVRT - p.v_G;
}

BoundaryEquilibrium boundary_equilibrium(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2,
                                         const WtGscParams& p) {
  auto g = [&](double lam) -> std::optional<double> {
    const auto x = combination_equilibrium(sub1, sub2, lam);
    if (!x) return std::nullopt;
    return surface_residual(p, *x);
  };

  std::array<std::optional<double>, kScanIntervals + 1> node{};
  for (int i = 0; i <= kScanIntervals; ++i) node[i] = g(static_cast<double>(i) / kScanIntervals);

  const double zero_tol = 1e-13;
  std::vector<double> roots;
  for (int i = 0; i <= kScanIntervals; ++i) {
    if (node[i] && std::abs(*node[i]) <= zero_tol) {
      const double lam = static_cast<double>(i) / kScanIntervals;
      if (roots.empty() || lam - roots.back() > 1.5 / kScanIntervals) roots.push_back(lam);
      continue;
    }
    if (i == kScanIntervals || !node[i] || !node[i + 1]) continue;
    if (std::abs(*node[i + 1]) <= zero_tol) continue;
    if ((*node[i] > 0) == (*node[i + 1] > 0)) continue;

    double lo = static_cast<double>(i) / kScanIntervals;
    double hi = static_cast<double>(i + 1) / kScanIntervals;
    double g_lo = *node[i];
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto gm = g(mid);
      if (!gm) throw Error(ErrorCode::SingularCombination, "combined matrix singular during root search");
      if (*gm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((*gm > 0) == (g_lo > 0)) {
        lo = mid;
        g_lo = *gm;
      } else {
        hi = mid;
      }
    }
    const auto g_hi = g(hi);
    roots.push_back(g_hi && std::abs(*g_hi) < std::abs(g_lo) ? hi : lo);
  }

  if (roots.empty()) {
    const auto g0 = node.front();
    const auto g1 = node.back();
    throw Error(ErrorCode::NoBracket,
                fmt::format("no convex-combination equilibrium on the threshold surface (g(0) = {:.4g}, g(1) = {:.4g})",
                            g0.value_or(std::nan("")), g1.value_or(std::nan(""))));
  }
  const double lam = *std::min_element(roots.begin(), roots.end(), [](double a, double b) {
    return std::abs(a - 0.5) < std::abs(b - 0.5);
  });
  const auto x = combination_equilibrium(sub1, sub2, lam);
  if (!x) throw Error(ErrorCode::SingularCombination, "combined matrix singular at the surface root");
  return {*x, lam, static_cast<int>(roots.size())};
}

LyapunovFamily lyapunov_family(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2, const Vec2d& x_e,
                               const WtGscParams& p) {
  LyapunovFamily fam;
  fam.d = sub1.flow(x_e) - sub2.flow(x_e);
  const double d1 = fam.d(0);
  const double d2 = fam.d(1);
  if (fam.d.norm() <= 1e-12) throw Error(ErrorCode::DegenerateDifference, "the two subsystems coincide at x_e");
  if (std::abs(d2) <= 1e-12) throw Error(ErrorCode::ZeroD2, "second component of b_1 - b_2 vanishes");

  const double r = 1.5 * p.R;
  const double x = 1.5 * p.omega * p.L;
  const double off0 = -r / d2;
  const double off1 = -d1 / d2;
  fam.P0 << 0.0, off0,
            off0, x / d2 + d1 * r / (d2 * d2);
  fam.P1 << 1.0, off1,
            off1, d1 * d1 / (d2 * d2);
  if (fam.P0(0, 1) != fam.P0(1, 0) || fam.P1(0, 1) != fam.P1(1, 0))
    throw Error(ErrorCode::InvalidArgument, "Lyapunov family lost symmetry");
  return fam;
}

IntervalSet solve_quadratic_positive(double a, double b, double c, double linear_tol) {
  if (std::abs(a) <= linear_tol) {
    if (b == 0.0) return c > 0 ? IntervalSet{Interval{}} : IntervalSet{};
    const double r = -c / b;
    return b > 0 ? IntervalSet{{r, kInf}} : IntervalSet{{-kInf, r}};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0) return a > 0 ? IntervalSet{Interval{}} : IntervalSet{};
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r1;
  double r2;
  if (q == 0.0) {
    r1 = r2 = 0.0;
  } else {
    r1 = q / a;
    r2 = c / q;
  }
  if (r1 > r2) std::swap(r1, r2);
  if (a > 0) return {{-kInf, r1}, {r2, kInf}};
  if (r1 < r2) return {{r1, r2}};
  return {};
}

IntervalSet intersect(const IntervalSet& x, const IntervalSet& y) {
  IntervalSet out;
  for (const auto& i : x)
    for (const auto& j : y) {
      const Interval k{std::max(i.lo, j.lo), std::min(i.hi, j.hi)};
      if (k.lo < k.hi) out.push_back(k);
    }
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  return out;
}

FeasibilityResult feasibility_at_mu(const Mat2d& A1, const Mat2d& A2, const LyapunovFamily& family, double mu) {
  FeasibilityResult res;
  const auto p_cond = positive_definite_in_p(family.P0, family.P1);
  IntervalSet set = p_cond.feasible;
  bool all_linear = true;
  for (const Mat2d* a : {&A1, &A2}) {
    if (set.empty()) break;
    // -(A^T P + P A + mu P) must be positive definite.
    const Mat2d c0 = -(a->transpose() * family.P0 + family.P0 * *a + mu * family.P0);
    const Mat2d c1 = -(a->transpose() * family.P1 + family.P1 * *a + mu * family.P1);
    const auto m_cond = positive_definite_in_p(c0, c1);
    all_linear = all_linear && m_cond.linear_det;
    set = intersect(set, m_cond.feasible);
  }
  res.linear_regime = all_linear;
  res.p_intervals = set;
  res.feasible = !set.empty();
  if (res.feasible) {
    const auto widest =
        std::max_element(set.begin(), set.end(), [](const Interval& a, const Interval& b) { return a.width() < b.width(); });
    if (std::isfinite(widest->lo) && std::isfinite(widest->hi))
      res.witness_p = 0.5 * (widest->lo + widest->hi);
    else if (std::isfinite(widest->lo))
      res.witness_p = widest->lo + std::max(1.0, std::abs(widest->lo));
    else if (std::isfinite(widest->hi))
      res.witness_p = widest->hi - std::max(1.0, std::abs(widest->hi));
    else
      res.witness_p = 0.0;
  }
  return res;
}

StabilityCertificate max_stability_index(const AffineSubsystemd& sub1, const AffineSubsystemd& sub2,
                                         const WtGscParams& p, const StabilityOptions& opts) {
  const BoundaryEquilibrium be = boundary_equilibrium(sub1, sub2, p);
  const LyapunovFamily fam = lyapunov_family(sub1, sub2, be.x_e, p);
  auto feasible = [&](double mu) { return feasibility_at_mu(sub1.A, sub2.A, fam, mu); };

  StabilityCertificate cert;
  cert.x_e = be.x_e;
  cert.lambda1 = be.lambda1;
  cert.d = fam.d;
  if (be.root_count > 1)
    cert.diagnostics.push_back(fmt::format("{} surface roots for lambda1; kept the one closest to 0.5", be.root_count));

  const double tol = opts.relative_tolerance;
  double mu = 0.0;
  if (feasible(0.0).feasible) {
    double lo = 0.0;
    double hi = 1.0;
    while (feasible(hi).feasible) {
      lo = hi;
      hi *= 2.0;
      if (hi > kMuCap) {
        cert.diagnostics.push_back("stability index capped at 1e6");
        lo = hi = kMuCap;
        break;
      }
    }
    for (int it = 0; it < 200 && hi - lo > tol * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid).feasible ? lo : hi) = mid;
    }
    mu = lo;
  } else if (!opts.report_negative) {
    mu = -kInf;
  } else if (!feasible(kRelaxationFloor).feasible) {
    cert.diagnostics.push_back("no positive definite P in the family; relaxation floor reached");
    mu = kRelaxationFloor;
  } else {
    double lo = kRelaxationFloor;
    double hi = 0.0;
    for (int it = 0; it < 200 && hi - lo > tol * std::abs(lo); ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid).feasible ? lo : hi) = mid;
    }
    mu = lo;
  }

  cert.mu = mu;
  if (std::isfinite(mu)) {
    const FeasibilityResult at = feasible(mu);
    if (at.feasible) {
      cert.p = at.witness_p;
      cert.P = fam.at(cert.p);
      if (at.linear_regime) cert.diagnostics.push_back("determinant conditions are linear in p");
    } else {
      cert.p = std::nan("");
      cert.P = Mat2d::Constant(std::nan(""));
    }
  } else {
    cert.p = std::nan("");
    cert.P = Mat2d::Constant(std::nan(""));
  }
  cert.feasible = mu > 0.0 && std::isfinite(cert.p);
  return cert;
}

StabilityCertificate max_stability_index(const WtGscParams& p, const StabilityOptions& opts) {
  return max_stability_index(build_normal_subsystem(p), build_lvrt_subsystem(p), p, opts);
}

std::optional<double> stability_index_or_invalid(const WtGscParams& p) {
  try {
    const StabilityCertificate cert = max_stability_index(p);
    if (!std::isfinite(cert.p)) return std::nullopt;
    return cert.mu;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Vec2d> shifted_drives(const SwitchedSystemd& system, const Vec2d& x_e) {
  std::vector<Vec2d> out;
  for (const auto& s : system.subsystems()) out.push_back(s.flow(x_e));
  return out;
}

SwitchedSystemd argmin_system(const SwitchedSystemd& system, const StabilityCertificate& cert) {
  return system.with_law(ArgminLyapunov<double>{cert.P, cert.x_e, shifted_drives(system, cert.x_e)});
}

std::vector<Vec2d> random_starts(int count, double radius, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec2d> out;
  for (int i = 0; i < count; ++i) {
    const double r = radius * std::sqrt(uniform01(rng));
    const double th = 2.0 * std::numbers::pi * uniform01(rng);
    out.emplace_back(r * std::cos(th), r * std::sin(th));
  }
  return out;
}

AuditReport audit_certificate(const StabilityCertificate& cert, const SwitchedSystemd& system,
                              const AuditOptions& opts) {
  if (!cert.feasible) throw Error(ErrorCode::InvalidArgument, "audit needs a feasible certificate");
  if (system.size() != 2) throw Error(ErrorCode::InvalidArgument, "audit expects a two-mode system");
  AuditReport rep;

  const std::vector<double> w{cert.lambda1, 1.0 - cert.lambda1};
  const auto comb = convex_combination(system.subsystems(), w);
  rep.combination_residual = comb.flow(cert.x_e).norm();
  if (!(rep.combination_residual <= 1e-8))
    throw Error(ErrorCode::AuditFailure, fmt::format("(a) combination residual {:.3g} at x_e", rep.combination_residual));

  Eigen::SelfAdjointEigenSolver<Mat2d> eig_p(cert.P, Eigen::EigenvaluesOnly);
  rep.min_eig_P = eig_p.eigenvalues().minCoeff();
  auto max_eig_m = [&](const Mat2d& a) {
    const Mat2d m = a.transpose() * cert.P + cert.P * a + cert.mu * cert.P;
    return Eigen::SelfAdjointEigenSolver<Mat2d>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  };
  rep.max_eig_M1 = max_eig_m(system.subsystem(1).A);
  rep.max_eig_M2 = max_eig_m(system.subsystem(2).A);
  if (!(rep.min_eig_P > 0) || !(rep.max_eig_M1 < 0) || !(rep.max_eig_M2 < 0))
    throw Error(ErrorCode::AuditFailure,
                fmt::format("(b) eig(P) min {:.3g}, eig(M1) max {:.3g}, eig(M2) max {:.3g}", rep.min_eig_P,
                            rep.max_eig_M1, rep.max_eig_M2));

  const SwitchedSystemd argmin = argmin_system(system, cert);
  EventOptions filippov;
  filippov.argmin_sliding = ArgminSliding::Filippov;
  const auto* threshold = std::get_if<ThresholdOnVoltage<double>>(&system.law());

  for (const Vec2d& x0 : random_starts(opts.starts, opts.start_radius, opts.seed)) {
    AuditStart st;
    st.x0 = x0;
    const auto traj = simulate(argmin, x0, 1, opts.t_end, opts.dt, filippov);
    double v_prev = kInf;
    double v0 = -1.0;
    for (const auto& s : traj.samples) {
      const Vec2d xi = s.x - cert.x_e;
      const double v = xi.dot(cert.P * xi);
      if (v0 < 0) v0 = v;
      if (v > v_prev + 1e-12 * v0 + 1e-15) st.argmin_monotone = false;
      v_prev = v;
    }
    st.argmin_error = (traj.samples.back().x - cert.x_e).norm();
    if (!st.argmin_monotone || !(st.argmin_error <= opts.argmin_tolerance))
      throw Error(ErrorCode::AuditFailure,
                  fmt::format("(c) argmin-law run from ({:.4f}, {:.4f}): monotone = {}, final error {:.3g}", x0(0),
                              x0(1), st.argmin_monotone, st.argmin_error));

    if (threshold != nullptr && system.output_map()) {
      const int sigma0 = system.output_map()->voltage(x0) >= threshold->v_lvrt ? 1 : 2;
      try {
        const auto th = simulate(system, x0, sigma0, opts.t_end, opts.dt);
        st.threshold_error = (th.samples.back().x - cert.x_e).norm();
        st.threshold_converged = st.threshold_error <= opts.threshold_tolerance;
      } catch (const Error&) {
        st.threshold_error = kInf;
        st.threshold_converged = false;
      }
      if (st.threshold_converged) ++rep.threshold_converged;
    }
    rep.starts.push_back(st);
  }
  return rep;
}

}  // namespace switchstab
