#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "switchstab/error.hpp"
#include "switchstab/fixtures.hpp"
#include "switchstab/sensitivity.hpp"
#include "switchstab/sobol_sequence.hpp"

using namespace switchstab;

namespace {

ParameterSpace box(int k, double lo, double hi) {
  ParameterSpace s;
  for (int i = 0; i < k; ++i) s.names.push_back("x" + std::to_string(i + 1));
  s.lows = Eigen::VectorXd::Constant(k, lo);
  s.highs = Eigen::VectorXd::Constant(k, hi);
  return s;
}

ScalarModel ishigami() {
  return [](const Eigen::VectorXd& x) -> std::optional<double> { return oracle::Ishigami::eval(x(0), x(1), x(2)); };
}

}  // namespace

TEST_SUITE("sobol_sequence") {
  TEST_CASE("van der Corput first dimension") {
    const auto m = sobol_sequence(1, 4);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 0.5);
    CHECK(m(2, 0) == 0.75);
    CHECK(m(3, 0) == 0.25);
  }

  TEST_CASE("origin first") {
    for (int d : {1, 5, 16}) CHECK(sobol_sequence(d, 1).isZero());
  }

  TEST_CASE("reference rows") {
    const auto m = sobol_sequence(16, 1024);
    const std::vector<std::pair<int, std::vector<double>>> rows = {
        {5, {0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125, 0.375, 0.875, 0.875, 0.125, 0.875,
             0.375}},
        {100, {0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875, 0.0234375, 0.4765625, 0.6328125,
               0.6953125, 0.4609375, 0.6796875, 0.4765625, 0.8515625, 0.3203125, 0.4921875}},
        {1023, {0.0009765625, 0.7529296875, 0.6123046875, 0.1455078125, 0.1865234375, 0.4384765625, 0.1396484375,
                0.6181640625, 0.3447265625, 0.8505859375, 0.6787109375, 0.0361328125, 0.1298828125, 0.6650390625,
                0.3623046875, 0.4638671875}},
    };
    for (const auto& [r, vals] : rows)
      for (int d = 0; d < 16; ++d) CHECK(m(r, d) == vals[d]);
  }

  TEST_CASE("skip continues the same sequence") {
    const auto full = sobol_sequence(7, 300);
    const auto tail = sobol_sequence(7, 100, 200);
    CHECK(tail == full.bottomRows(100));
  }

  TEST_CASE("dyadic stratification") {
    const auto m = sobol_sequence(8, 1024);
    for (int d = 0; d < 8; ++d) {
      std::vector<int> counts(32, 0);
      for (int r = 0; r < 1024; ++r) ++counts[static_cast<int>(m(r, d) * 32)];
      for (int c : counts) CHECK(c == 32);
    }
    CHECK((m.array() >= 0).all());
    CHECK((m.array() < 1).all());
  }

  TEST_CASE("unsupported dimension") {
    try {
      sobol_sequence(17, 4);
      FAIL("expected DimensionUnsupported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionUnsupported);
    }
    CHECK_THROWS_AS(sobol_sequence(0, 4), Error);
    CHECK_THROWS_AS(sobol_sequence(2, 0), Error);
  }
}

TEST_SUITE("sensitivity") {
  TEST_CASE("Saltelli design structure") {
    const ParameterSpace one = box(1, 0, 1);
    const auto d1 = saltelli_matrices(one, 2);
    REQUIRE(d1.AB.size() == 1);
    CHECK(d1.AB[0] == d1.B);

    const ParameterSpace s = fixtures::study_space();
    const auto d = saltelli_matrices(s, 16);
    REQUIRE(d.AB.size() == 8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        if (j == i) CHECK(d.AB[i].col(j) == d.B.col(j));
        else CHECK(d.AB[i].col(j) == d.A.col(j));
      }
    }
    for (const Eigen::MatrixXd* m : {&d.A, &d.B}) {
      CHECK((m->col(4).array() >= 1.5).all());
      CHECK((m->col(4).array() <= 3.0).all());
      CHECK((m->col(6).array() >= 2.17e-4).all());
      CHECK((m->col(6).array() <= 4.5e-3).all());
    }
    try {
      saltelli_matrices(s, 12);
      FAIL("expected BadSampleCount");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadSampleCount);
    }
  }

  TEST_CASE("parameter space validation") {
    ParameterSpace s = fixtures::study_space();
    s.validate();
    ParameterSpace dup = s;
    dup.names[1] = "K_pd";
    CHECK_THROWS_AS(dup.validate(), Error);
    ParameterSpace inv = s;
    inv.lows(0) = 0.3;
    CHECK_THROWS_AS(inv.validate(), Error);
    ParameterSpace unknown = s;
    unknown.names[0] = "K_px";
    CHECK_THROWS_AS(unknown.validate(), Error);
    ParameterSpace both = s;
    both.frozen["K_pd"] = 0.1;
    CHECK_THROWS_AS(both.validate(), Error);
    CHECK_THROWS_AS(ParameterSpace{}.validate(), Error);
  }

  TEST_CASE("Ishigami indices") {
    const auto r = estimate_indices(box(3, -std::numbers::pi, std::numbers::pi), ishigami(), 1 << 14);
    CHECK(r.evaluations == (1 << 14) * 5);
    CHECK(std::abs(r.S(0) - oracle::Ishigami::S1()) <= 0.02);
    CHECK(std::abs(r.S(1) - oracle::Ishigami::S2()) <= 0.02);
    CHECK(std::abs(r.S(2) - oracle::Ishigami::S3()) <= 0.02);
    CHECK(std::abs(r.S_T(2) - oracle::Ishigami::ST3()) <= 0.02);
    CHECK(r.variance == doctest::Approx(oracle::Ishigami::variance()).epsilon(0.02));
    for (int i = 0; i < 3; ++i) CHECK(r.S_T(i) >= r.S(i) - 3 * r.S_stderr(i));
  }

  TEST_CASE("additive model has no interactions") {
    const Eigen::Vector4d c(1.0, -2.0, 0.5, 3.0);
    const ScalarModel lin = [c](const Eigen::VectorXd& x) -> std::optional<double> { return c.dot(x); };
    const auto r = estimate_indices(box(4, 0, 1), lin, 1 << 12);
    CHECK(std::abs(r.S.sum() - 1.0) <= 0.02);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(r.S_T(i) - r.S(i)) <= 0.02);
      CHECK(std::abs(r.S(i) - c(i) * c(i) / c.squaredNorm()) <= 0.02);
    }
  }

  TEST_CASE("constant model") {
    const ScalarModel k = [](const Eigen::VectorXd&) -> std::optional<double> { return 3.7; };
    const auto r = estimate_indices(box(3, 0, 1), k, 64);
    CHECK(r.variance == 0.0);
    CHECK(r.S.isZero());
    CHECK(r.S_T.isZero());
  }

  TEST_CASE("affine rescaling leaves the indices unchanged") {
    const auto space = box(3, -std::numbers::pi, std::numbers::pi);
    const auto base = estimate_indices(space, ishigami(), 256);
    const ScalarModel scaled = [](const Eigen::VectorXd& x) -> std::optional<double> {
      return -4.0 * oracle::Ishigami::eval(x(0), x(1), x(2)) + 11.0;
    };
    const auto r = estimate_indices(space, scaled, 256);
    CHECK((r.S - base.S).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((r.S_T - base.S_T).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("determinism across worker counts") {
    const auto space = box(3, -std::numbers::pi, std::numbers::pi);
    SobolOptions one;
    SobolOptions four;
    four.jobs = 4;
    const auto a = estimate_indices(space, ishigami(), 512, one);
    const auto b = estimate_indices(space, ishigami(), 512, four);
    CHECK(a.S == b.S);
    CHECK(a.S_T == b.S_T);
    CHECK(a.S_stderr == b.S_stderr);
    CHECK(a.variance == b.variance);
  }

  TEST_CASE("invalid evaluations") {
    const auto space = box(2, 0, 1);
    // invalid whenever the first coordinate exceeds 0.75
    const ScalarModel partial = [](const Eigen::VectorXd& x) -> std::optional<double> {
      if (x(0) > 0.75) return std::nullopt;
      return x(0) + 2 * x(1);
    };
    SobolOptions pen;
    const auto rp = estimate_indices(space, partial, 64, pen);
    CHECK(rp.invalid_count > 0);
    CHECK(rp.rows_used == 64);

    SobolOptions ex;
    ex.policy = InvalidPolicy::ExcludeRow;
    const auto re = estimate_indices(space, partial, 64, ex);
    CHECK(re.invalid_count == rp.invalid_count);
    CHECK(re.rows_used < 64);
    CHECK(re.evaluations == 64 * 4);

    const ScalarModel none = [](const Eigen::VectorXd&) -> std::optional<double> { return std::nullopt; };
    try {
      estimate_indices(space, none, 16, ex);
      FAIL("expected AllInvalid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllInvalid);
    }
    CHECK_THROWS_AS(estimate_indices(space, partial, 4), Error);
  }

  TEST_CASE("stability model over the sampling box") {
    const ParameterSpace space = fixtures::study_space();
    const auto model = stability_model(space, resolved_params(fixtures::nominal()), 0.79);
    Eigen::VectorXd z(8);
    z << 0.2, 0.1, 5.0, 5.0, 1.68, 3.25e-4, 1.2e-3, 8.66e-4;
    const auto mu = model(z);
    REQUIRE(mu.has_value());
    CHECK(*mu == doctest::Approx(48.49).epsilon(1e-3));

    ParameterSpace frozen = space;
    frozen.names.pop_back();
    frozen.lows.conservativeResize(7);
    frozen.highs.conservativeResize(7);
    frozen.frozen["L"] = 8.66e-4;
    const auto m2 = stability_model(frozen, resolved_params(fixtures::nominal()), 0.79);
    CHECK(*m2(Eigen::VectorXd(z.head(7))) == doctest::Approx(*mu));
  }
}
