#include "bearing_ins/simulator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bearing_ins {

namespace {
constexpr double kGridSnap = 1e-9;
}

void Environment::validate() const {
  if (!g_I.allFinite() || !m_I.allFinite() || !p_landmark.allFinite()) {
    throw std::invalid_argument("environment: non-finite entries");
  }
  if (std::abs(m_I.norm() - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "environment: m_I must be unit-norm, got " << m_I.norm();
    throw std::invalid_argument(msg.str());
  }
  if (g_I.cross(m_I).norm() <= 1e-6 * g_I.norm()) {
    throw std::invalid_argument("environment: g_I and m_I must not be collinear");
  }
}

TrajectorySpec figure_eight_trajectory() {
  using std::numbers::pi;
  const double s3 = std::sqrt(3.0);
  TrajectorySpec spec;
  spec.position = [s3](double t) {
    return Vec3(std::cos(5.0 * t), std::sin(10.0 * t) / 4.0, -s3 * std::sin(10.0 * t) / 4.0);
  };
  spec.velocity = [s3](double t) {
    return Vec3(-5.0 * std::sin(5.0 * t), 2.5 * std::cos(10.0 * t),
                -2.5 * s3 * std::cos(10.0 * t));
  };
  spec.acceleration = [s3](double t) {
    return Vec3(-25.0 * std::cos(5.0 * t), -25.0 * std::sin(10.0 * t),
                25.0 * s3 * std::sin(10.0 * t));
  };
  spec.angular_velocity = [](double t) {
    return Vec3(std::sin(0.1 * t + pi), 0.5 * std::sin(0.2 * t),
                0.1 * std::sin(0.3 * t + pi / 3.0));
  };
  spec.R0 = exp_so3(Vec3(0.0, pi / 2.0, 0.0), 1.0);
  return spec;
}

GroundTruth::GroundTruth(TrajectorySpec spec, Environment env, double step)
    : spec_(std::move(spec)), env_(std::move(env)), step_(step) {
  if (!(step_ > 0.0)) {
    throw std::invalid_argument("GroundTruth: step must be positive");
  }
  if (!spec_.position || !spec_.velocity || !spec_.acceleration || !spec_.angular_velocity) {
    throw std::invalid_argument("GroundTruth: trajectory callbacks must all be set");
  }
  env_.validate();
  r_cache_.push_back(spec_.R0);
}

const Rotation& GroundTruth::rotation_at_index(std::size_t k) const {
  while (r_cache_.size() <= k) {
    const std::size_t j = r_cache_.size() - 1;
    const double tj = static_cast<double>(j) * step_;
    // Midpoint-sampled exact exponential step: second order in `step`,
    // exactly on the group at every sample.
    const Vec3 w = spec_.angular_velocity(tj + 0.5 * step_);
    r_cache_.push_back(r_cache_.back() * exp_so3(w, step_));
  }
  return r_cache_[k];
}

RigidBodyState GroundTruth::state_at(double t) const {
  if (!(t >= 0.0)) {
    throw std::invalid_argument("GroundTruth: t must be non-negative");
  }
  const auto k = static_cast<std::size_t>(std::floor(t / step_ + kGridSnap));
  const double rem = t - static_cast<double>(k) * step_;

  RigidBodyState s;
  s.t = t;
  s.p_I = spec_.position(t);
  s.v_I = spec_.velocity(t);
  s.R = rotation_at_index(k);
  if (rem > kGridSnap) {
    const double tk = static_cast<double>(k) * step_;
    s.R = s.R * exp_so3(spec_.angular_velocity(tk + 0.5 * rem), rem);
  }
  return s;
}

SensorFrame synth_sensors(const RigidBodyState& state, const Vec3& accel_I, const Vec3& omega,
                          const Environment& env) {
  const Vec3 rel = state.p_I - env.p_landmark;
  const double range = rel.norm();
  if (range <= 1e-6) {
    std::ostringstream msg;
    msg << "synth_sensors: bearing undefined, vehicle within " << range << " m of the landmark";
    throw std::domain_error(msg.str());
  }
  const Rotation R_bi = state.R.inverse();
  SensorFrame f;
  f.t = state.t;
  f.omega = omega;
  f.a_B = R_bi * (accel_I - env.g_I);
  f.eta_B = R_bi * (rel / range);
  f.m_B = R_bi * env.m_I;
  return f;
}

SensorFrame synth_sensors(const RigidBodyState& state, const Vec3& accel_I, const Vec3& omega,
                          const Environment& env, const NoiseSpec& noise, std::mt19937_64& rng) {
  SensorFrame f = synth_sensors(state, accel_I, omega, env);
  if (!noise.any()) return f;

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix<double, 12, 1> draws;
  for (int i = 0; i < 12; ++i) draws[i] = normal(rng);

  f.omega += std::sqrt(noise.omega_power) * draws.segment<3>(0);
  f.a_B += std::sqrt(noise.accel_power) * draws.segment<3>(3);
  f.eta_B += std::sqrt(noise.bearing_power) * draws.segment<3>(6);
  f.m_B += std::sqrt(noise.m_power) * draws.segment<3>(9);

  const double n = f.eta_B.norm();
  if (n <= 1e-9) {
    throw std::domain_error("synth_sensors: bearing noise collapsed the measurement");
  }
  f.eta_B /= n;
  return f;
}

std::vector<TruthSample> run_truth(const TrajectorySpec& spec, const Environment& env,
                                   const NoiseSpec& noise, double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("run_truth: dt must be positive");
  if (!(t_end >= dt)) throw std::invalid_argument("run_truth: t_end must be at least dt");

  GroundTruth truth(spec, env, dt);
  const auto n = static_cast<std::size_t>(std::floor(t_end / dt + kGridSnap)) + 1;
  std::mt19937_64 rng(noise.seed);
  const bool noisy = noise.any();

  std::vector<TruthSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    TruthSample s;
    s.state = truth.state_at(t);
    s.accel_I = truth.accel_inertial_at(t);
    const Vec3 omega = spec.angular_velocity(t);
    s.frame = noisy ? synth_sensors(s.state, s.accel_I, omega, env, noise, rng)
                    : synth_sensors(s.state, s.accel_I, omega, env);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bearing_ins
