#pragma once

// Grid-side converter of a wind turbine as a two-mode switched affine system:
// mode 1 is normal operation, mode 2 is LVRT with reactive-current priority.
// State x = (i_d, i_q) in per-unit.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchstab/linear2.hpp"
#include "switchstab/switched_core.hpp"

namespace switchstab {

struct WtGscParams {
  double K_pd = 0.10;
  double K_pq = 0.10;
  double K_id = 5.00;
  double K_iq = 5.00;
  double K_1 = 2.00;
  double L_g = 3.25e-4;
  double R = 7.58e-4;
  double L = 1.00e-3;
  /// Synchronous angular speed acting on the per-unit inductances (rad/s).
  double omega = 2.0 * 3.14159265358979323846 * 50.0;
  /// Calibrated so that the normal equilibrium sits at 0.79 p.u.
  double v_G = 0.79 - 1.5 * 7.58e-4;
  double v_LVRT = 0.80;
  double I_d1 = 1.0;
  double I_d2 = 1.0;
  double I_max = 1.2;
  /// Sign with which the LVRT reactive-current reference enters the q axis.
  int q_sign = -1;
};

/// Names accepted by parameter files and parameter spaces, in file order.
const std::vector<std::string>& parameter_names();
bool is_parameter_name(std::string_view name);
double get_parameter(const WtGscParams& p, std::string_view name);
void set_parameter(WtGscParams& p, std::string_view name, double value);

/// Checks the documented parameter invariants; throws InvalidArgument.
void validate(const WtGscParams& p);

/// A, B and u of one subsystem (x' = A x + B u).
struct SubsystemFactors {
  Mat2d A;
  Mat2d B;
  Vec2d u;
};

/// omega^2 L_g^2 + K_pd K_pq.
double control_denominator(const WtGscParams& p);

SubsystemFactors normal_factors(const WtGscParams& p);
SubsystemFactors lvrt_factors(const WtGscParams& p);

/// Intermediate matrices of the LVRT closure: A_2 = (I - E F)^-1 (A_1 + B_1 F).
struct LvrtClosure {
  Mat2d E;
  Mat2d F;
};
LvrtClosure lvrt_closure(const WtGscParams& p);

AffineSubsystemd build_normal_subsystem(const WtGscParams& p);
AffineSubsystemd build_lvrt_subsystem(const WtGscParams& p);

/// v_g = v_G + 1.5 R i_d - 1.5 omega L i_q.
double grid_voltage(const WtGscParams& p, const Vec2d& x);

struct PowerOutput {
  double P_g = 0;
  double Q_g = 0;
};

enum class PowerScaling { AsWritten, PerUnit };

/// P_g = 1.5 v_g i_d, Q_g = -1.5 v_g i_q. PerUnit divides both by 1.5.
PowerOutput power_output(const WtGscParams& p, const Vec2d& x, PowerScaling scaling = PowerScaling::AsWritten);

/// v_G that places the normal-mode equilibrium (I_d1, 0) at the target voltage.
double calibrate_grid_voltage(const WtGscParams& p, double target_normal_voltage);

struct CurrentLimitCheck {
  bool within = true;
  double margin = 0;
};
CurrentLimitCheck check_current_limit(const WtGscParams& p, const Vec2d& x_or_ref);

OutputMap<double> make_output_map(const WtGscParams& p, PowerScaling scaling = PowerScaling::AsWritten);

struct ThresholdSettings {
  double hysteresis_band = 0;
  double min_dwell = 0;
};

/// Normal + LVRT subsystems under the voltage threshold law.
SwitchedSystemd make_wtgsc_system(const WtGscParams& p, ThresholdSettings settings = {});

/// Base parameters plus the values of a named subset. When
/// target_normal_voltage is set, v_G is recalibrated after the overrides.
WtGscParams with_overrides(const WtGscParams& base, std::span<const std::string> names,
                           std::span<const double> values, std::optional<double> target_normal_voltage);

}  // namespace switchstab
