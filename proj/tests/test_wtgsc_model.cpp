#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "switchstab/error.hpp"
#include "switchstab/wtgsc_model.hpp"

using namespace switchstab;

namespace {

WtGscParams nominal_params() {
  WtGscParams p;
  p.v_G = calibrate_grid_voltage(p, 0.79);
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("wtgsc_model") {
  TEST_CASE("normal subsystem") {
    const WtGscParams p = nominal_params();
    CHECK(control_denominator(p) == doctest::Approx(0.020425).epsilon(1e-4));
    const auto f = normal_factors(p);
    CHECK(f.A(0, 0) == doctest::Approx(-24.48).epsilon(1e-3));
    CHECK(f.A(0, 1) == doctest::Approx(-25.00).epsilon(1e-3));
    CHECK(f.A(1, 0) == doctest::Approx(25.00).epsilon(1e-3));
    CHECK(f.A(1, 1) == doctest::Approx(-24.48).epsilon(1e-3));
    CHECK((f.B + f.A).cwiseAbs().maxCoeff() <= 1e-14);

    const auto s = build_normal_subsystem(p);
    const Vec2d x = subsystem_equilibrium(s);
    CHECK(x(0) == doctest::Approx(p.I_d1).epsilon(1e-12));
    CHECK(std::abs(x(1)) <= 1e-12);

    Eigen::EigenSolver<Mat2d> es(s.A);
    CHECK(es.eigenvalues().real().maxCoeff() < 0);

    WtGscParams bad = p;
    bad.K_pd = 0;
    bad.L_g = 0;
    CHECK(code_of([&] { normal_factors(bad); }) == ErrorCode::DegenerateDenominator);
  }

  TEST_CASE("LVRT subsystem against a direct linear solve") {
    const WtGscParams p = nominal_params();
    const double d = std::pow(p.omega * p.L_g, 2) + p.K_pd * p.K_pq;
    const double wl = p.omega * p.L_g;
    Mat2d e;
    e << p.K_pd * p.K_pq, wl * p.K_pq, -wl * p.K_pd, p.K_pd * p.K_pq;
    e /= d;
    Mat2d f;
    f << 0, 0, -p.R, p.omega * p.L;
    f *= 1.5 * p.K_1 * p.q_sign;
    const auto n = normal_factors(p);
    const Mat2d lhs = Mat2d::Identity() - e * f;
    const Mat2d a2 = oracle::gauss_solve(lhs, Mat2d(n.A + n.B * f));
    const Mat2d b2 = oracle::gauss_solve(lhs, n.B);

    const auto l = lvrt_factors(p);
    CHECK((l.A - a2).norm() <= 1e-12 * a2.norm());
    CHECK((l.B - b2).norm() <= 1e-12 * b2.norm());
    CHECK(l.u(0) == p.I_d2);
    CHECK(l.u(1) == doctest::Approx(-p.K_1 * (0.9 - p.v_G)));
  }

  TEST_CASE("LVRT subsystem tends to the normal one as K_1 -> 0") {
    WtGscParams p = nominal_params();
    const auto normal = build_normal_subsystem(p);
    auto at = [&](double k1) {
      p.K_1 = k1;
      return build_lvrt_subsystem(p);
    };
    const auto s4 = at(1e-4);
    const auto s5 = at(1e-5);
    at(1e-3);
    // first-order extrapolation to K_1 = 0
    const Mat2d a0 = s5.A - (s4.A - s5.A) / 9.0;
    const Vec2d b0 = s5.b - (s4.b - s5.b) / 9.0;
    CHECK((a0 - normal.A).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((b0 - normal.b).cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("equilibria reproduce the published operating points") {
    const WtGscParams p = nominal_params();
    const Vec2d xn = subsystem_equilibrium(build_normal_subsystem(p));
    CHECK(grid_voltage(p, xn) == doctest::Approx(0.79).epsilon(1e-9));

    const auto lvrt = build_lvrt_subsystem(p);
    const Vec2d xl = subsystem_equilibrium(lvrt);
    CHECK(lvrt.flow(xl).norm() <= 1e-9);
    CHECK(std::abs(xl(0) - 1.00) <= 0.02);
    CHECK(std::abs(xl(1) + 0.11) <= 0.02);
    CHECK(std::abs(grid_voltage(p, xl) - 0.84) <= 0.02);
  }

  TEST_CASE("current limit in LVRT mode") {
    WtGscParams p = nominal_params();
    p.I_max = 1.003;
    CHECK(code_of([&] { build_lvrt_subsystem(p); }) == ErrorCode::CurrentLimit);

    const auto a = check_current_limit(p, Vec2d(0, 0));
    CHECK(a.within);
    CHECK(a.margin == doctest::Approx(1.003));
    WtGscParams q = nominal_params();
    q.I_max = 1.15;
    const auto b = check_current_limit(q, Vec2d(1.0, -0.575));
    CHECK_FALSE(b.within);
    CHECK(b.margin == doctest::Approx(1.15 - std::hypot(1.0, 0.575)));
  }

  TEST_CASE("grid voltage and power") {
    const WtGscParams p = nominal_params();
    CHECK(grid_voltage(p, Vec2d::Zero()) == p.v_G);
    CHECK(std::abs(grid_voltage(p, Vec2d(1.0, 0.0)) - 0.79) <= 0.005);
    CHECK(std::abs(grid_voltage(p, Vec2d(1.0, -0.11)) - 0.84) <= 0.02);

    const Vec2d x(0.3, -0.7);
    const Vec2d y(1.1, 0.2);
    for (double a : {0.0, 0.25, 0.5, 1.0})
      CHECK(grid_voltage(p, Vec2d(a * x + (1 - a) * y)) ==
            doctest::Approx(a * grid_voltage(p, x) + (1 - a) * grid_voltage(p, y)).epsilon(1e-14));

    const auto zero = power_output(p, Vec2d::Zero());
    CHECK(zero.P_g == 0.0);
    CHECK(zero.Q_g == 0.0);
    const auto n = power_output(p, Vec2d(1.0, 0.0));
    CHECK(n.P_g == doctest::Approx(1.185));
    CHECK(n.Q_g == 0.0);
    const auto l = power_output(p, Vec2d(1.0, -0.11));
    const double v = grid_voltage(p, Vec2d(1.0, -0.11));
    CHECK(l.Q_g == doctest::Approx(1.5 * v * 0.11));
    CHECK(l.Q_g > 0);
    CHECK(std::abs(l.Q_g - 0.1386) <= 1e-3);
    const auto pu = power_output(p, Vec2d(1.0, -0.11), PowerScaling::PerUnit);
    CHECK(pu.P_g == doctest::Approx(l.P_g / 1.5));
    CHECK(pu.Q_g == doctest::Approx(l.Q_g / 1.5));
  }

  TEST_CASE("grid voltage calibration") {
    WtGscParams p;
    CHECK(calibrate_grid_voltage(p, 0.79) == doctest::Approx(0.7889).epsilon(1e-4));
    CHECK(calibrate_grid_voltage(p, 0.90) == doctest::Approx(0.8989).epsilon(1e-4));
    p.R = 0;
    CHECK(calibrate_grid_voltage(p, 0.79) == 0.79);
    CHECK_THROWS_AS(calibrate_grid_voltage(p, 1.3), Error);
    CHECK_THROWS_AS(calibrate_grid_voltage(p, 0.0), Error);
  }

  TEST_CASE("parameter access and validation") {
    WtGscParams p;
    for (const auto& name : parameter_names()) {
      CHECK(is_parameter_name(name));
      const double v = get_parameter(p, name);
      set_parameter(p, name, v);
      CHECK(get_parameter(p, name) == v);
    }
    CHECK(parameter_names().size() == 15);
    CHECK_FALSE(is_parameter_name("K_px"));
    CHECK_THROWS_AS(get_parameter(p, "K_px"), Error);
    CHECK_THROWS_AS(set_parameter(p, "q_sign", 0.5), Error);

    validate(nominal_params());
    auto rejects = [](auto mutate) {
      WtGscParams q = nominal_params();
      mutate(q);
      CHECK(code_of([&] { validate(q); }) == ErrorCode::InvalidArgument);
    };
    rejects([](WtGscParams& q) { q.K_1 = 1.4; });
    rejects([](WtGscParams& q) { q.K_1 = 3.1; });
    rejects([](WtGscParams& q) { q.v_LVRT = 0.95; });
    rejects([](WtGscParams& q) { q.K_id = -1; });
    rejects([](WtGscParams& q) { q.L = 0; });
    rejects([](WtGscParams& q) { q.R = -1e-4; });
    rejects([](WtGscParams& q) { q.I_max = 0.9; });
  }

  TEST_CASE("overrides recalibrate the grid voltage") {
    const WtGscParams base = nominal_params();
    const std::vector<std::string> names{"R", "K_pd"};
    const std::vector<double> values{2e-3, 0.15};
    const WtGscParams p = with_overrides(base, names, values, 0.79);
    CHECK(p.R == 2e-3);
    CHECK(p.K_pd == 0.15);
    CHECK(grid_voltage(p, Vec2d(p.I_d1, 0)) == doctest::Approx(0.79).epsilon(1e-12));
    const WtGscParams q = with_overrides(base, names, values, std::nullopt);
    CHECK(q.v_G == base.v_G);
  }

  TEST_CASE("output map matches the model voltage") {
    const WtGscParams p = nominal_params();
    const auto out = make_output_map(p);
    const Vec2d x(0.7, -0.3);
    CHECK(out.voltage(x) == doctest::Approx(grid_voltage(p, x)).epsilon(1e-15));
    const auto d = derive_signals(out, x);
    const auto pw = power_output(p, x);
    CHECK(d.p_g == doctest::Approx(pw.P_g));
    CHECK(d.q_g == doctest::Approx(pw.Q_g));
  }
}
