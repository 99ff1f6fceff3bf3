#pragma once

// Generic planar switched affine systems x' = A_sigma x + b_sigma: subsystem
// equilibria, convex combinations, and fixed-step simulation with
// switching-event localization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "switchstab/error.hpp"
#include "switchstab/linear2.hpp"

namespace switchstab {

/// Label given to subsystems produced by convex_combination.
inline constexpr int kCombinationLabel = 0;

template <typename Scalar>
struct AffineSubsystem {
  Mat2<Scalar> A = Mat2<Scalar>::Zero();
  /// Constant drive B_i u_i.
  Vec2<Scalar> b = Vec2<Scalar>::Zero();
  int label = 1;

  Vec2<Scalar> flow(const Vec2<Scalar>& x) const { return A * x + b; }
};

/// Affine voltage read-out v = offset + gain . x with power P = k v x_0,
/// Q = -k v x_1.
template <typename Scalar>
struct OutputMap {
  Scalar v_offset = 0;
  Vec2<Scalar> v_gain = Vec2<Scalar>::Zero();
  Scalar power_factor = Scalar(1.5);

  Scalar voltage(const Vec2<Scalar>& x) const { return v_offset + v_gain.dot(x); }
};

template <typename Scalar>
struct ThresholdOnVoltage {
  Scalar v_lvrt = Scalar(0.8);
  Scalar hysteresis_band = 0;
  Scalar min_dwell = 0;
};

template <typename Scalar>
struct ArgminLyapunov {
  Mat2<Scalar> P = Mat2<Scalar>::Identity();
  Vec2<Scalar> x_e = Vec2<Scalar>::Zero();
  /// b_i = A_i x_e + B_i u_i, one per subsystem.
  std::vector<Vec2<Scalar>> b_list;
};

struct FixedMode {
  int mode = 1;
};

template <typename Scalar>
using SwitchingLaw = std::variant<ThresholdOnVoltage<Scalar>, ArgminLyapunov<Scalar>, FixedMode>;

template <typename Scalar>
class SwitchedAffineSystem {
 public:
  SwitchedAffineSystem(std::vector<AffineSubsystem<Scalar>> subsystems, SwitchingLaw<Scalar> law,
                       std::optional<OutputMap<Scalar>> output_map = std::nullopt)
      : subsystems_(std::move(subsystems)), law_(std::move(law)), output_map_(std::move(output_map)) {
    validate();
  }

  std::size_t size() const { return subsystems_.size(); }
  const std::vector<AffineSubsystem<Scalar>>& subsystems() const { return subsystems_; }
  /// Mode index is 1-based.
  const AffineSubsystem<Scalar>& subsystem(int mode) const { return subsystems_.at(mode - 1); }
  const SwitchingLaw<Scalar>& law() const { return law_; }
  const std::optional<OutputMap<Scalar>>& output_map() const { return output_map_; }

  SwitchedAffineSystem with_law(SwitchingLaw<Scalar> law) const {
    return SwitchedAffineSystem(subsystems_, std::move(law), output_map_);
  }

 private:
  void validate() const {
    if (subsystems_.empty()) throw Error(ErrorCode::InvalidArgument, "system needs at least one subsystem");
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      const auto& s = subsystems_[i];
      if (s.label != static_cast<int>(i + 1))
        throw Error(ErrorCode::InvalidArgument, "subsystem labels must be 1..n in order");
      if (!s.A.allFinite() || !s.b.allFinite())
        throw Error(ErrorCode::InvalidArgument, "subsystem " + std::to_string(s.label) + " has non-finite entries");
    }
    const int n = static_cast<int>(subsystems_.size());
    if (const auto* th = std::get_if<ThresholdOnVoltage<Scalar>>(&law_)) {
      if (n != 2) throw Error(ErrorCode::InvalidArgument, "voltage threshold law needs exactly two modes");
      if (!(th->v_lvrt > 0 && th->v_lvrt < 1))
        throw Error(ErrorCode::InvalidArgument, "v_LVRT must lie in (0, 1)");
      if (!(th->hysteresis_band >= 0) || !(th->min_dwell >= 0))
        throw Error(ErrorCode::InvalidArgument, "hysteresis band and dwell must be non-negative");
    } else if (const auto* am = std::get_if<ArgminLyapunov<Scalar>>(&law_)) {
      if (static_cast<int>(am->b_list.size()) != n)
        throw Error(ErrorCode::InvalidArgument, "argmin law needs one b vector per subsystem");
      const Mat2<Scalar>& p = am->P;
      if (std::abs(p(0, 1) - p(1, 0)) > Scalar(1e-12) * p.norm())
        throw Error(ErrorCode::InvalidArgument, "argmin law matrix P must be symmetric");
      if (!(p(0, 0) > 0 && p.determinant() > 0))
        throw Error(ErrorCode::InvalidArgument, "argmin law matrix P must be positive definite");
    } else {
      const int m = std::get<FixedMode>(law_).mode;
      if (m < 1 || m > n) throw Error(ErrorCode::InvalidArgument, "fixed mode out of range");
    }
  }

  std::vector<AffineSubsystem<Scalar>> subsystems_;
  SwitchingLaw<Scalar> law_;
  std::optional<OutputMap<Scalar>> output_map_;
};

template <typename Scalar>
struct Sample {
  Scalar t = 0;
  Vec2<Scalar> x = Vec2<Scalar>::Zero();
  /// Mode in effect right after t. While sliding, the mode with the larger
  /// Filippov weight.
  int sigma = 1;
  bool sliding = false;
};

template <typename Scalar>
struct SwitchEvent {
  Scalar t_switch = 0;
  int from_mode = 1;
  int to_mode = 1;
  /// True when the crossing time was located by bisection; false for
  /// switches applied at a step boundary.
  bool localized = false;
};

template <typename Scalar>
struct DerivedSignals {
  Scalar v_g = 0;
  Scalar p_g = 0;
  Scalar q_g = 0;
};

template <typename Scalar>
struct Trajectory {
  std::vector<Sample<Scalar>> samples;
  std::vector<SwitchEvent<Scalar>> events;
  /// Empty unless the system carries an output map.
  std::vector<DerivedSignals<Scalar>> derived;
};

enum class EquilibriumKind { Regular, Virtual, Boundary };

inline const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::Regular: return "Regular";
    case EquilibriumKind::Virtual: return "Virtual";
    case EquilibriumKind::Boundary: return "Boundary";
  }
  return "?";
}

template <typename Scalar>
struct EquilibriumReport {
  int mode = 1;
  Vec2<Scalar> x_star = Vec2<Scalar>::Zero();
  EquilibriumKind kind = EquilibriumKind::Virtual;
  Scalar region_margin = 0;
  Scalar v_g = 0;
};

/// Solves A x + b = 0.
template <typename Scalar>
Vec2<Scalar> subsystem_equilibrium(const AffineSubsystem<Scalar>& sub) {
  if (!is_invertible(sub.A))
    throw Error(ErrorCode::SingularMatrix, "subsystem " + std::to_string(sub.label) + " matrix is singular");
  const Mat2<Scalar> inv = sub.A.inverse();
  Vec2<Scalar> x = -inv * sub.b;
  // one step of residual correction
  x -= inv * sub.flow(x);
  return x;
}

template <typename Scalar>
DerivedSignals<Scalar> derive_signals(const OutputMap<Scalar>& out, const Vec2<Scalar>& x) {
  const Scalar v = out.voltage(x);
  return {v, out.power_factor * v * x(0), -out.power_factor * v * x(1)};
}

/// Region margin is v_g - v_LVRT for mode 1 and (v_LVRT + band) - v_g for
/// mode 2, so positive means inside the mode's own active region.
template <typename Scalar>
EquilibriumReport<Scalar> classify_equilibrium(const SwitchedAffineSystem<Scalar>& system, int mode) {
  const auto* law = std::get_if<ThresholdOnVoltage<Scalar>>(&system.law());
  if (law == nullptr)
    throw Error(ErrorCode::InvalidArgument, "classification needs a voltage threshold law");
  if (!system.output_map()) throw Error(ErrorCode::MissingOutputMap, "classification needs an output map");
  if (mode < 1 || mode > 2) throw Error(ErrorCode::InvalidArgument, "mode must be 1 or 2");

  EquilibriumReport<Scalar> rep;
  rep.mode = mode;
  rep.x_star = subsystem_equilibrium(system.subsystem(mode));
  rep.v_g = system.output_map()->voltage(rep.x_star);
  rep.region_margin = mode == 1 ? rep.v_g - law->v_lvrt : (law->v_lvrt + law->hysteresis_band) - rep.v_g;
  if (std::abs(rep.region_margin) <= Scalar(1e-9))
    rep.kind = EquilibriumKind::Boundary;
  else
    rep.kind = rep.region_margin > 0 ? EquilibriumKind::Regular : EquilibriumKind::Virtual;
  return rep;
}

template <typename Scalar>
AffineSubsystem<Scalar> convex_combination(std::span<const AffineSubsystem<Scalar>> subsystems,
                                           std::span<const Scalar> weights) {
  if (subsystems.empty() || weights.size() != subsystems.size())
    throw Error(ErrorCode::WeightDomain, "need one weight per subsystem");
  Scalar total = 0;
  for (Scalar w : weights) {
    if (!(w >= 0)) throw Error(ErrorCode::WeightDomain, "weights must be non-negative");
    total += w;
  }
  if (std::abs(total - Scalar(1)) > Scalar(1e-12)) throw Error(ErrorCode::WeightDomain, "weights must sum to 1");

  AffineSubsystem<Scalar> out;
  out.label = kCombinationLabel;
  for (std::size_t i = 0; i < subsystems.size(); ++i) {
    out.A += weights[i] * subsystems[i].A;
    out.b += weights[i] * subsystems[i].b;
  }
  return out;
}

template <typename Scalar>
AffineSubsystem<Scalar> convex_combination(const std::vector<AffineSubsystem<Scalar>>& subsystems,
                                           const std::vector<Scalar>& weights) {
  return convex_combination(std::span<const AffineSubsystem<Scalar>>(subsystems),
                            std::span<const Scalar>(weights));
}

enum class Integrator { Rk4, Exact };

/// How the argmin law treats a switching surface that both modes push into.
enum class ArgminSliding {
  /// Recompute the argmin at every step start (chattering).
  Chatter,
  /// Follow the Filippov convex combination along the surface (2 modes only).
  Filippov,
};

struct EventOptions {
  double event_tolerance = 1e-9;
  std::size_t max_events = 1'000'000;
  double divergence_limit = 1e6;
  Integrator integrator = Integrator::Rk4;
  ArgminSliding argmin_sliding = ArgminSliding::Chatter;
};

namespace detail {

template <typename Scalar>
class Simulator {
 public:
  Simulator(const SwitchedAffineSystem<Scalar>& system, const EventOptions& opts)
      : sys_(system), opts_(opts) {
    if (const auto* am = std::get_if<ArgminLyapunov<Scalar>>(&sys_.law())) {
      argmin_ = am;
      if (opts_.argmin_sliding == ArgminSliding::Filippov) {
        if (sys_.size() != 2) throw Error(ErrorCode::InvalidArgument, "Filippov sliding needs two modes");
        filippov_ = true;
        grad_ = am->P * (am->b_list[0] - am->b_list[1]);
        if (grad_.squaredNorm() == Scalar(0)) filippov_ = false;
      }
    } else if (const auto* th = std::get_if<ThresholdOnVoltage<Scalar>>(&sys_.law())) {
      if (!sys_.output_map()) throw Error(ErrorCode::MissingOutputMap, "threshold law needs an output map");
      threshold_ = th;
    }
  }

  Trajectory<Scalar> run(const Vec2<Scalar>& x0, int sigma0, Scalar t_end, Scalar dt) {
    if (!(dt > 0) || !(t_end > 0)) throw Error(ErrorCode::InvalidArgument, "dt and t_end must be positive");
    if (!x0.allFinite()) throw Error(ErrorCode::InvalidArgument, "initial state must be finite");
    if (sigma0 < 1 || sigma0 > static_cast<int>(sys_.size()))
      throw Error(ErrorCode::InvalidArgument, "initial mode out of range");

    const auto steps = static_cast<long>(std::ceil(t_end / dt - Scalar(1e-9)));
    traj_.samples.reserve(static_cast<std::size_t>(steps) + 1);
    Vec2<Scalar> x = x0;
    mode_ = sigma0;

    if (filippov_ && std::abs(surface(x)) <= Scalar(1e-14) * (Scalar(1) + x.norm()) && sliding_ok(x)) {
      sliding_ = true;
    }
    start_of_step(x, Scalar(0));
    record(Scalar(0), x);

    for (long k = 1; k <= steps; ++k) {
      const Scalar t0 = static_cast<Scalar>(k - 1) * dt;
      const Scalar t1 = k == steps ? t_end : static_cast<Scalar>(k) * dt;
      x = step(x, t0, t1 - t0);
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > Scalar(opts_.divergence_limit))
        throw Error(ErrorCode::NonFiniteState, "state diverged at t = " + std::to_string(double(t1)));
      start_of_step(x, t1);
      record(t1, x);
    }
    return std::move(traj_);
  }

 private:
  Vec2<Scalar> propagate(int mode, const Vec2<Scalar>& x, Scalar h) const {
    const auto& sub = sys_.subsystem(mode);
    if (opts_.integrator == Integrator::Exact) return affine_flow_exact(sub.A, sub.b, x, h);
    return rk4_step<Scalar>([&](const Vec2<Scalar>& y) { return sub.flow(y); }, x, h);
  }

  int argmin_mode(const Vec2<Scalar>& x) const {
    const Vec2<Scalar> pxi = argmin_->P * (x - argmin_->x_e);
    int best = 1;
    Scalar best_val = pxi.dot(argmin_->b_list[0]);
    for (std::size_t i = 1; i < argmin_->b_list.size(); ++i) {
      const Scalar v = pxi.dot(argmin_->b_list[i]);
      if (v < best_val) {
        best_val = v;
        best = static_cast<int>(i) + 1;
      }
    }
    return best;
  }

  int desired_mode(int mode, const Vec2<Scalar>& x, Scalar t) const {
    if (threshold_ != nullptr) {
      if (t - last_event_t_ < threshold_->min_dwell) return mode;
      const Scalar v = sys_.output_map()->voltage(x);
      if (mode == 1 && v < threshold_->v_lvrt) return 2;
      if (mode == 2 && v >= threshold_->v_lvrt + threshold_->hysteresis_band) return 1;
      return mode;
    }
    if (argmin_ != nullptr) return argmin_mode(x);
    return std::get<FixedMode>(sys_.law()).mode;
  }

  // Surface h(x) = (x - x_e)^T P (b_1 - b_2); mode 1 is selected for h <= 0.
  Scalar surface(const Vec2<Scalar>& x) const { return grad_.dot(x - argmin_->x_e); }

  bool sliding_ok(const Vec2<Scalar>& x) const {
    return grad_.dot(sys_.subsystem(1).flow(x)) > 0 && grad_.dot(sys_.subsystem(2).flow(x)) < 0;
  }

  Scalar filippov_weight(const Vec2<Scalar>& x) const {
    const Scalar a1 = grad_.dot(sys_.subsystem(1).flow(x));
    const Scalar a2 = grad_.dot(sys_.subsystem(2).flow(x));
    if (a2 - a1 == Scalar(0)) return Scalar(0.5);
    return std::clamp(a2 / (a2 - a1), Scalar(0), Scalar(1));
  }

  Vec2<Scalar> project(const Vec2<Scalar>& x) const { return x - grad_ * (surface(x) / grad_.squaredNorm()); }

  Vec2<Scalar> slide(const Vec2<Scalar>& x, Scalar h) const {
    auto field = [&](const Vec2<Scalar>& y) -> Vec2<Scalar> {
      const Scalar w = filippov_weight(y);
      return w * sys_.subsystem(1).flow(y) + (Scalar(1) - w) * sys_.subsystem(2).flow(y);
    };
    return project(rk4_step<Scalar>(field, x, h));
  }

  void push_event(Scalar t, int from, int to, bool localized) {
    if (!traj_.events.empty() && !(t > traj_.events.back().t_switch)) return;
    traj_.events.push_back({t, from, to, localized});
    last_event_t_ = t;
    if (traj_.events.size() > opts_.max_events)
      throw Error(ErrorCode::EventOverflow, "more than " + std::to_string(opts_.max_events) + " switching events");
  }

  void start_of_step(const Vec2<Scalar>& x, Scalar t) {
    if (hold_mode_) {
      hold_mode_ = false;
      return;
    }
    if (sliding_) {
      const int dominant = filippov_weight(x) >= Scalar(0.5) ? 1 : 2;
      if (dominant != mode_) {
        push_event(t, mode_, dominant, false);
        mode_ = dominant;
      }
      return;
    }
    const int want = desired_mode(mode_, x, t);
    if (want != mode_) {
      push_event(t, mode_, want, false);
      mode_ = want;
    }
  }

  Vec2<Scalar> step(const Vec2<Scalar>& x, Scalar t0, Scalar h) {
    if (sliding_) {
      Vec2<Scalar> x1 = slide(x, h);
      if (!sliding_ok(x1)) {
        sliding_ = false;
        // leave along the mode whose flow points away from the surface
        const int leave = grad_.dot(sys_.subsystem(1).flow(x1)) <= 0 ? 1 : 2;
        if (leave != mode_) push_event(t0 + h, mode_, leave, false);
        mode_ = leave;
        hold_mode_ = true;
      }
      return x1;
    }

    Vec2<Scalar> x1 = propagate(mode_, x, h);
    if (threshold_ == nullptr && argmin_ == nullptr) return x1;
    if (desired_mode(mode_, x1, t0 + h) == mode_) return x1;
    if (argmin_ != nullptr && !filippov_) return x1;  // switched at the next step start

    Scalar lo = 0;
    Scalar hi = h;
    while (hi - lo > Scalar(opts_.event_tolerance)) {
      const Scalar mid = (lo + hi) / Scalar(2);
      if (desired_mode(mode_, propagate(mode_, x, mid), t0 + mid) != mode_)
        hi = mid;
      else
        lo = mid;
    }
    Vec2<Scalar> xc = propagate(mode_, x, hi);
    if (filippov_ && sliding_ok(xc)) {
      sliding_ = true;
      xc = project(xc);
      return hi < h ? slide(xc, h - hi) : xc;
    }
    const int to = desired_mode(mode_, xc, t0 + hi);
    push_event(t0 + hi, mode_, to, true);
    mode_ = to;
    return hi < h ? propagate(mode_, xc, h - hi) : xc;
  }

  void record(Scalar t, const Vec2<Scalar>& x) {
    traj_.samples.push_back({t, x, mode_, sliding_});
    if (sys_.output_map()) traj_.derived.push_back(derive_signals(*sys_.output_map(), x));
  }

  const SwitchedAffineSystem<Scalar>& sys_;
  EventOptions opts_;
  const ArgminLyapunov<Scalar>* argmin_ = nullptr;
  const ThresholdOnVoltage<Scalar>* threshold_ = nullptr;
  bool filippov_ = false;
  bool sliding_ = false;
  Vec2<Scalar> grad_ = Vec2<Scalar>::Zero();
  int mode_ = 1;
  bool hold_mode_ = false;
  Scalar last_event_t_ = -std::numeric_limits<Scalar>::infinity();
  Trajectory<Scalar> traj_;
};

}  // namespace detail

/// Fixed-step simulation of a switched affine system.
///
/// Threshold switches are located by bisection to opts.event_tolerance; at
/// most one located switch is taken per step, and any further crossing within
/// the step is applied at the next step boundary. Argmin switches are taken at
/// step boundaries unless opts.argmin_sliding selects the Filippov treatment.
template <typename Scalar>
Trajectory<Scalar> simulate(const SwitchedAffineSystem<Scalar>& system, const Vec2<Scalar>& x0, int sigma0,
                            Scalar t_end, Scalar dt, const EventOptions& opts = {}) {
  return detail::Simulator<Scalar>(system, opts).run(x0, sigma0, t_end, dt);
}

/// State velocity at a recorded sample, using the Filippov combination while
/// the sample is sliding.
template <typename Scalar>
Vec2<Scalar> sample_velocity(const SwitchedAffineSystem<Scalar>& system, const Sample<Scalar>& s) {
  if (!s.sliding) return system.subsystem(s.sigma).flow(s.x);
  const auto& am = std::get<ArgminLyapunov<Scalar>>(system.law());
  const Vec2<Scalar> g = am.P * (am.b_list[0] - am.b_list[1]);
  const Vec2<Scalar> f1 = system.subsystem(1).flow(s.x);
  const Vec2<Scalar> f2 = system.subsystem(2).flow(s.x);
  const Scalar a1 = g.dot(f1);
  const Scalar a2 = g.dot(f2);
  const Scalar w = a2 - a1 == Scalar(0) ? Scalar(0.5) : std::clamp(a2 / (a2 - a1), Scalar(0), Scalar(1));
  return w * f1 + (Scalar(1) - w) * f2;
}

template <typename Scalar>
struct OscillationMetrics {
  std::size_t switch_count = 0;
  std::optional<Scalar> mean_period;
  std::optional<std::pair<Scalar, Scalar>> v_g_range;
  bool converged = false;
  int final_mode = 1;
};

template <typename Scalar>
OscillationMetrics<Scalar> oscillation_metrics(const Trajectory<Scalar>& traj) {
  if (traj.samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  OscillationMetrics<Scalar> m;
  m.switch_count = traj.events.size();
  m.final_mode = traj.samples.back().sigma;

  // Same-direction event pairs: consecutive events with identical (from, to).
  Scalar period_sum = 0;
  std::size_t period_count = 0;
  for (int from : {1, 2}) {
    std::optional<Scalar> prev;
    for (const auto& e : traj.events) {
      if (e.from_mode != from) continue;
      if (prev) {
        period_sum += e.t_switch - *prev;
        ++period_count;
      }
      prev = e.t_switch;
    }
  }
  if (period_count > 0) m.mean_period = period_sum / static_cast<Scalar>(period_count);

  if (!traj.derived.empty()) {
    auto [lo, hi] = std::minmax_element(traj.derived.begin(), traj.derived.end(),
                                        [](const auto& a, const auto& b) { return a.v_g < b.v_g; });
    m.v_g_range = std::make_pair(lo->v_g, hi->v_g);
  }

  const Scalar t0 = traj.samples.front().t;
  const Scalar t1 = traj.samples.back().t;
  const Scalar span = t1 - t0;
  const bool quiet_tail = std::none_of(traj.events.begin(), traj.events.end(), [&](const auto& e) {
    return e.t_switch > t1 - Scalar(0.2) * span;
  });
  const Scalar t_ref = t1 - Scalar(0.05) * span;
  auto it = std::upper_bound(traj.samples.begin(), traj.samples.end(), t_ref,
                             [](Scalar t, const auto& s) { return t < s.t; });
  const auto& ref = it == traj.samples.begin() ? *it : *std::prev(it);
  m.converged = quiet_tail && (traj.samples.back().x - ref.x).norm() <= Scalar(1e-4);
  return m;
}

using AffineSubsystemd = AffineSubsystem<double>;
using SwitchedSystemd = SwitchedAffineSystem<double>;
using Trajectoryd = Trajectory<double>;

}  // namespace switchstab
