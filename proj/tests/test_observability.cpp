#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "oracles.hpp"

#include "bearing_ins/observability.hpp"

using namespace bearing_ins;
using std::numbers::pi;

namespace {

TrajectorySpec drifting_no_spin() {
  // Smooth translation, zero body rates: A(t) is the constant chain.
  TrajectorySpec spec;
  spec.position = [](double t) {
    return Vec3(2.0 + 0.3 * std::sin(t), 1.0 + 0.2 * t, 2.0 + 0.1 * std::cos(0.5 * t));
  };
  spec.velocity = [](double t) {
    return Vec3(0.3 * std::cos(t), 0.2, -0.05 * std::sin(0.5 * t));
  };
  spec.acceleration = [](double t) {
    return Vec3(-0.3 * std::sin(t), 0.0, -0.025 * std::cos(0.5 * t));
  };
  spec.angular_velocity = [](double) { return Vec3::Zero(); };
  return spec;
}

TrajectorySpec static_hover() {
  TrajectorySpec spec;
  spec.position = [](double) { return Vec3(1.0, 0.5, 1.0); };
  spec.velocity = [](double) { return Vec3::Zero(); };
  spec.acceleration = [](double) { return Vec3::Zero(); };
  spec.angular_velocity = [](double) { return Vec3::Zero(); };
  return spec;
}

}  // namespace

TEST_CASE("transition matrix identity, composition and inverse") {
  const TrajectorySpec spec = figure_eight_trajectory();
  GroundTruth truth(spec, Environment{}, 0.5e-3);
  const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::full, 0.0, 4.0, 1e-3);

  const Eigen::MatrixXd id = transition_matrix(traj, 1.0, 1.0);
  CHECK((id - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd phi_30 = transition_matrix(traj, 3.0, 0.0);
  const Eigen::MatrixXd phi_31 = transition_matrix(traj, 3.0, 1.0);
  const Eigen::MatrixXd phi_10 = transition_matrix(traj, 1.0, 0.0);
  CHECK((phi_31 * phi_10 - phi_30).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXd phi_03 = transition_matrix(traj, 0.0, 3.0);
  CHECK((phi_03 * phi_30 - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(transition_matrix(traj, 0.00037, 0.0), std::out_of_range);
  CHECK_THROWS_AS(transition_matrix(traj, 5.0, 0.0), std::out_of_range);
}

TEST_CASE("zero-rate transition matches the matrix exponential") {
  GroundTruth truth(drifting_no_spin(), Environment{}, 0.5e-3);
  for (Variant v : {Variant::full, Variant::reduced}) {
    const LtvTrajectory traj = LtvTrajectory::from_truth(truth, v, 0.0, 2.0, 1e-3);
    const double tau = 1.5;
    const Eigen::MatrixXd got = transition_matrix(traj, tau, 0.0);
    // Oracle: exponential of the constant A (nilpotent chain, so the
    // series is a polynomial the oracle evaluates independently).
    const Eigen::MatrixXd a = traj.at_node(0).mats.A;
    const Eigen::MatrixXd want = (a * tau).exp();
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    // Spot-check the polynomial block: position picks up tau^2/2 of gravity.
    CHECK(got(0, 6) == doctest::Approx(tau * tau / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("gramian of the trivial full-rank pair is the identity") {
  // Hand-built samples: A = 0, C = I, so phi = I and W = I exactly.
  const int n = 12;
  LtvTrajectory::Sample s;
  s.mats.A = Eigen::MatrixXd::Zero(n, n);
  s.mats.B = Eigen::MatrixXd::Zero(n, 3);
  s.mats.C = Eigen::MatrixXd::Identity(n, n);
  s.R = Rotation::identity();
  s.eta_I = Vec3::UnitX();
  const LtvTrajectory traj(Variant::full, 0.0, 0.1,
                           std::vector<LtvTrajectory::Sample>(21, s));

  const GramianReport rep = gramian(traj, 0.0, 1.0);
  CHECK((rep.W - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(rep.min_eig == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.mu_pe == doctest::Approx(0.0));  // constant bearing
  CHECK_FALSE(rep.pe_satisfied);
}

TEST_CASE("static vehicle with a fixed bearing is not uniformly observable") {
  GroundTruth truth(static_hover(), Environment{}, 0.5e-3);
  const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::full, 0.0, 4.0, 1e-3);
  const GramianReport rep = gramian(traj, 0.0, 2.0);
  CHECK(rep.min_eig >= -1e-9);
  CHECK(rep.min_eig < 1e-9);
  CHECK(rep.mu_pe < 1e-9);
  CHECK_FALSE(rep.pe_satisfied);
}

TEST_CASE("eight-trajectory gramian sweep stays positive (regression baseline)") {
  const TrajectorySpec spec = figure_eight_trajectory();
  GroundTruth truth(spec, Environment{}, 0.5e-3);
  const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::full, 0.0, 8.0, 1e-3);

  double min_eig = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t + 2.0 <= 8.0 + 1e-9; t += 0.5) {
    const GramianReport rep = gramian(traj, t, 2.0);
    CHECK(rep.min_eig > 5e-4);
    CHECK(rep.pe_satisfied);
    min_eig = std::min(min_eig, rep.min_eig);
  }
  // Frozen from the first full sweep of this scenario; the 30 s minimum
  // (8.818e-4) falls in the same band.
  CHECK(min_eig > 8.6e-4);
  CHECK(min_eig < 9.8e-4);
}

TEST_CASE("pe_margin closed forms") {
  SUBCASE("constant bearing gives zero margin") {
    BearingTrack track;
    track.t0 = 0.0;
    track.dt = 0.01;
    track.eta_I.assign(201, Vec3(0.6, 0.8, 0.0));
    CHECK(std::abs(pe_margin(track, 0.0, 2.0)) < 1e-12);
  }

  SUBCASE("uniform rotation in the xy-plane over a full period") {
    BearingTrack track;
    track.t0 = 0.0;
    track.dt = 1e-3;
    const double w = 2.0 * pi;  // period 1 s
    for (int k = 0; k <= 1000; ++k) {
      const double t = 1e-3 * k;
      track.eta_I.push_back(Vec3(std::cos(w * t), std::sin(w * t), 0.0));
    }
    // Closed form: averaged projector diag(1/2, 1/2, 1); the trapezoid rule
    // is exact over a full period of the trig integrand.
    CHECK(pe_margin(track, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("input validation") {
    BearingTrack track;
    track.t0 = 0.0;
    track.dt = 0.01;
    track.eta_I.assign(201, Vec3(1.0, 0.0, 0.0));
    CHECK_THROWS_AS(pe_margin(track, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pe_margin(track, 0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(pe_margin(track, 0.0, 0.015), std::invalid_argument);  // off-grid delta
    track.eta_I[5] = Vec3(2.0, 0.0, 0.0);
    CHECK_THROWS_AS(pe_margin(track, 0.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("factorized gramian agrees with the direct one") {
  const TrajectorySpec spec = figure_eight_trajectory();
  GroundTruth truth(spec, Environment{}, 0.5e-3);

  for (Variant v : {Variant::full, Variant::reduced}) {
    const LtvTrajectory traj = LtvTrajectory::from_truth(truth, v, 0.0, 6.0, 1e-3);
    for (double t : {0.0, 1.0, 2.5}) {
      const GramianReport direct = gramian(traj, t, 2.0);
      const Eigen::MatrixXd fact = gramian_via_factorization(traj, t, 2.0);
      CHECK((direct.W - fact).cwiseAbs().maxCoeff() < 1e-6);
    }
    // Attitude samples stay orthogonal along the horizon.
    for (std::size_t k = 0; k < traj.node_count(); k += 500) {
      const Mat3 r = traj.at_node(k).R.matrix();
      CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("zero-rate identity-attitude gramian matches the closed form") {
  GroundTruth truth(drifting_no_spin(), Environment{}, 0.5e-3);
  const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::reduced, 0.0, 3.0, 1e-3);
  const double delta = 2.0;

  const GramianReport direct = gramian(traj, 0.0, delta);
  const Eigen::MatrixXd fact = gramian_via_factorization(traj, 0.0, delta);
  CHECK((direct.W - fact).cwiseAbs().maxCoeff() < 1e-9);

  // Closed form: with R = I the integrand blocks are c_i(s) c_j(s) Pi(s)
  // with c = (1, s, s^2/2); evaluate with the same trapezoid rule.
  const double dt = traj.dt();
  const auto n_steps = static_cast<std::size_t>(std::llround(delta / dt));
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(9, 9);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double s = dt * static_cast<double>(i);
    const double weight = (i == 0 || i == n_steps) ? 0.5 : 1.0;
    const Mat3 proj = projector(traj.at_node(i).eta_I);
    const double c[3] = {1.0, s, 0.5 * s * s};
    for (int bi = 0; bi < 3; ++bi) {
      for (int bj = 0; bj < 3; ++bj) {
        want.block<3, 3>(3 * bi, 3 * bj) += weight * c[bi] * c[bj] * proj;
      }
    }
  }
  want *= dt / delta;
  CHECK((direct.W - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("PE margin above threshold implies a positive gramian") {
  // Randomized corpus: whenever a window's bearing margin clears the PE
  // threshold, the windowed gramian of the full pair must be positive
  // definite (no counterexample permitted).
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> amp(0.2, 0.6);
  std::uniform_real_distribution<double> freq(0.8, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 6.28);

  for (int trial = 0; trial < 3; ++trial) {
    const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
    const double w1 = freq(rng), w2 = freq(rng), w3 = freq(rng);
    const double f1 = phase(rng), f2 = phase(rng), f3 = phase(rng);
    TrajectorySpec spec;
    spec.position = [=](double t) {
      return Vec3(2.0 + a1 * std::sin(w1 * t + f1), -1.0 + a2 * std::sin(w2 * t + f2),
                  1.5 + a3 * std::sin(w3 * t + f3));
    };
    spec.velocity = [=](double t) {
      return Vec3(a1 * w1 * std::cos(w1 * t + f1), a2 * w2 * std::cos(w2 * t + f2),
                  a3 * w3 * std::cos(w3 * t + f3));
    };
    spec.acceleration = [=](double t) {
      return Vec3(-a1 * w1 * w1 * std::sin(w1 * t + f1), -a2 * w2 * w2 * std::sin(w2 * t + f2),
                  -a3 * w3 * w3 * std::sin(w3 * t + f3));
    };
    spec.angular_velocity = [=](double t) { return Vec3(0.3 * std::sin(w2 * t), 0.2, 0.0); };

    GroundTruth truth(spec, Environment{}, 0.5e-3);
    const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::full, 0.0, 5.0, 1e-3);
    for (double t = 0.0; t + 2.0 <= 5.0 + 1e-9; t += 1.0) {
      const GramianReport rep = gramian(traj, t, 2.0);
      if (rep.pe_satisfied) {
        CHECK(rep.min_eig > 0.0);
      }
      CHECK(rep.min_eig >= -1e-9);
    }
  }
}

TEST_CASE("gramian is invariant to the landmark-shift normalization") {
  const Vec3 shift(5.0, -2.0, 1.0);
  TrajectorySpec base = figure_eight_trajectory();

  TrajectorySpec moved = base;
  const auto base_pos = base.position;
  moved.position = [base_pos, shift](double t) { return Vec3(base_pos(t) + shift); };

  Environment env_origin;
  Environment env_shifted;
  env_shifted.p_landmark = shift;

  GroundTruth truth_a(base, env_origin, 0.5e-3);
  GroundTruth truth_b(moved, env_shifted, 0.5e-3);
  const LtvTrajectory ta = LtvTrajectory::from_truth(truth_a, Variant::full, 0.0, 3.0, 1e-3);
  const LtvTrajectory tb = LtvTrajectory::from_truth(truth_b, Variant::full, 0.0, 3.0, 1e-3);

  const GramianReport wa = gramian(ta, 0.5, 2.0);
  const GramianReport wb = gramian(tb, 0.5, 2.0);
  CHECK((wa.W - wb.W).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(wa.mu_pe == doctest::Approx(wb.mu_pe).epsilon(1e-9));
}

TEST_CASE("window bounds are enforced") {
  const TrajectorySpec spec = figure_eight_trajectory();
  GroundTruth truth(spec, Environment{}, 0.5e-3);
  const LtvTrajectory traj = LtvTrajectory::from_truth(truth, Variant::reduced, 0.0, 3.0, 1e-3);

  CHECK_THROWS_AS((void)gramian(traj, 2.0, 2.0), std::out_of_range);
  CHECK_THROWS_AS((void)gramian(traj, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)gramian(traj, 0.0, 0.0015), std::invalid_argument);
  CHECK_THROWS_AS((void)gramian_via_factorization(traj, 2.0, 2.0), std::out_of_range);
  CHECK_NOTHROW((void)gramian(traj, 1.0, 2.0));
}
