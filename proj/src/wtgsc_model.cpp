#include "switchstab/wtgsc_model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "switchstab/error.hpp"

namespace switchstab {

namespace {

struct FieldRef {
  const char* name;
  double WtGscParams::*member;
};

constexpr FieldRef kFields[] = {
    {"K_pd", &WtGscParams::K_pd}, {"K_pq", &WtGscParams::K_pq},     {"K_id", &WtGscParams::K_id},
    {"K_iq", &WtGscParams::K_iq}, {"K_1", &WtGscParams::K_1},       {"L_g", &WtGscParams::L_g},
    {"R", &WtGscParams::R},       {"L", &WtGscParams::L},           {"omega", &WtGscParams::omega},
    {"v_G", &WtGscParams::v_G},   {"v_LVRT", &WtGscParams::v_LVRT}, {"I_d1", &WtGscParams::I_d1},
    {"I_d2", &WtGscParams::I_d2}, {"I_max", &WtGscParams::I_max},
};

const FieldRef* find_field(std::string_view name) {
  for (const auto& f : kFields)
    if (name == f.name) return &f;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& f : kFields) v.emplace_back(f.name);
    v.emplace_back("q_sign");
    return v;
  }();
  return names;
}

bool is_parameter_name(std::string_view name) { return name == "q_sign" || find_field(name) != nullptr; }

double get_parameter(const WtGscParams& p, std::string_view name) {
  if (name == "q_sign") return p.q_sign;
  if (const auto* f = find_field(name)) return p.*(f->member);
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown parameter '{}'", name));
}

void set_parameter(WtGscParams& p, std::string_view name, double value) {
  if (name == "q_sign") {
    if (value != 1.0 && value != -1.0) throw Error(ErrorCode::InvalidArgument, "q_sign must be +1 or -1");
    p.q_sign = static_cast<int>(value);
    return;
  }
  if (const auto* f = find_field(name)) {
    p.*(f->member) = value;
    return;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown parameter '{}'", name));
}

void validate(const WtGscParams& p) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  for (const auto& f : kFields)
    if (!std::isfinite(p.*(f.member))) fail(fmt::format("{} must be finite", f.name));
  if (!(p.K_pd > 0 && p.K_pq > 0 && p.K_id > 0 && p.K_iq > 0 && p.K_1 > 0))
    fail("controller gains must be positive");
  if (!(p.L_g > 0 && p.L > 0)) fail("inductances must be positive");
  if (!(p.R >= 0)) fail("R must be non-negative");
  if (!(p.omega > 0)) fail("omega must be positive");
  if (p.K_1 < 1.5 || p.K_1 > 3.0) fail(fmt::format("K_1 = {} outside [1.5, 3]", p.K_1));
  if (p.v_LVRT < 0.2 || p.v_LVRT > 0.9) fail(fmt::format("v_LVRT = {} outside [0.2, 0.9]", p.v_LVRT));
  if (!(p.I_max > 0) || p.I_max < std::max(p.I_d1, p.I_d2)) fail("I_max must be at least max(I_d1, I_d2)");
  if (p.q_sign != 1 && p.q_sign != -1) fail("q_sign must be +1 or -1");
  if (!(control_denominator(p) > 0)) fail("omega^2 L_g^2 + K_pd K_pq must be positive");
}

double control_denominator(const WtGscParams& p) {
  const double wl = p.omega * p.L_g;
  return wl * wl + p.K_pd * p.K_pq;
}

SubsystemFactors normal_factors(const WtGscParams& p) {
  const double den = control_denominator(p);
  if (!(den > 1e-15)) throw Error(ErrorCode::DegenerateDenominator, "omega^2 L_g^2 + K_pd K_pq vanishes");
  const double wl = p.omega * p.L_g;
  Mat2d a;
  a << -p.K_pq * p.K_id, -wl * p.K_iq,
        wl * p.K_id,     -p.K_pd * p.K_iq;
  a /= den;
  return {a, -a, Vec2d(p.I_d1, 0.0)};
}

LvrtClosure lvrt_closure(const WtGscParams& p) {
  const double den = control_denominator(p);
  if (!(den > 1e-15)) throw Error(ErrorCode::DegenerateDenominator, "omega^2 L_g^2 + K_pd K_pq vanishes");
  const double wl = p.omega * p.L_g;
  LvrtClosure c;
  c.E << p.K_pd * p.K_pq, wl * p.K_pq,
         -wl * p.K_pd,    p.K_pd * p.K_pq;
  c.E /= den;
  c.F << 0.0, 0.0,
         -p.R, p.omega * p.L;
  c.F *= 1.5 * p.K_1 * p.q_sign;
  return c;
}

SubsystemFactors lvrt_factors(const WtGscParams& p) {
  const SubsystemFactors normal = normal_factors(p);
  const LvrtClosure c = lvrt_closure(p);
  const Mat2d closure = Mat2d::Identity() - c.E * c.F;
  if (!(std::abs(closure.determinant()) > 1e-12))
    throw Error(ErrorCode::SingularClosure, "I - E F is singular");
  const Mat2d inv = closure.inverse();
  SubsystemFactors f;
  f.A = inv * (normal.A + normal.B * c.F);
  f.B = inv * normal.B;
  f.u = Vec2d(p.I_d2, p.q_sign * p.K_1 * (0.9 - p.v_G));
  return f;
}

AffineSubsystemd build_normal_subsystem(const WtGscParams& p) {
  const SubsystemFactors f = normal_factors(p);
  return {f.A, f.B * f.u, 1};
}

AffineSubsystemd build_lvrt_subsystem(const WtGscParams& p) {
  const SubsystemFactors f = lvrt_factors(p);
  AffineSubsystemd sub{f.A, f.B * f.u, 2};
  // Reactive-current priority: the active reference min{I_d2, i_dmax} must
  // resolve to I_d2 at the LVRT operating point.
  if (is_invertible(sub.A)) {
    const Vec2d x_star = subsystem_equilibrium(sub);
    const double i_qref = p.K_1 * (0.9 - grid_voltage(p, x_star));
    const double room = p.I_max * p.I_max - i_qref * i_qref;
    if (room < p.I_d2 * p.I_d2)
      throw Error(ErrorCode::CurrentLimit,
                  fmt::format("i_dmax = {:.4g} < I_d2 = {:.4g} at the LVRT operating point",
                              room > 0 ? std::sqrt(room) : 0.0, p.I_d2));
  }
  return sub;
}

double grid_voltage(const WtGscParams& p, const Vec2d& x) {
  return p.v_G + 1.5 * p.R * x(0) - 1.5 * p.omega * p.L * x(1);
}

PowerOutput power_output(const WtGscParams& p, const Vec2d& x, PowerScaling scaling) {
  const double v = grid_voltage(p, x);
  const double k = scaling == PowerScaling::AsWritten ? 1.5 : 1.0;
  return {k * v * x(0), -k * v * x(1)};
}

double calibrate_grid_voltage(const WtGscParams& p, double target_normal_voltage) {
  if (!(target_normal_voltage > 0 && target_normal_voltage < 1.2))
    throw Error(ErrorCode::InvalidArgument, "target normal voltage must lie in (0, 1.2)");
  return target_normal_voltage - 1.5 * p.R * p.I_d1;
}

CurrentLimitCheck check_current_limit(const WtGscParams& p, const Vec2d& x_or_ref) {
  if (!(p.I_max > 0)) throw Error(ErrorCode::InvalidArgument, "I_max must be positive");
  const double n = x_or_ref.norm();
  return {n <= p.I_max, p.I_max - n};
}

OutputMap<double> make_output_map(const WtGscParams& p, PowerScaling scaling) {
  OutputMap<double> out;
  out.v_offset = p.v_G;
  out.v_gain = Vec2d(1.5 * p.R, -1.5 * p.omega * p.L);
  out.power_factor = scaling == PowerScaling::AsWritten ? 1.5 : 1.0;
  return out;
}

SwitchedSystemd make_wtgsc_system(const WtGscParams& p, ThresholdSettings settings) {
  ThresholdOnVoltage<double> law{p.v_LVRT, settings.hysteresis_band, settings.min_dwell};
  return SwitchedSystemd({build_normal_subsystem(p), build_lvrt_subsystem(p)}, law, make_output_map(p));
}

WtGscParams with_overrides(const WtGscParams& base, std::span<const std::string> names,
                           std::span<const double> values, std::optional<double> target_normal_voltage) {
  if (names.size() != values.size()) throw Error(ErrorCode::InvalidArgument, "names/values size mismatch");
  WtGscParams p = base;
  for (std::size_t i = 0; i < names.size(); ++i) set_parameter(p, names[i], values[i]);
  if (target_normal_voltage) p.v_G = calibrate_grid_voltage(p, *target_normal_voltage);
  return p;
}

}  // namespace switchstab
