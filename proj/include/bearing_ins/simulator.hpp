// Ground-truth rigid-body kinematics and sensor synthesis (rate gyro,
// accelerometer, landmark bearing, body-frame reference vector).
#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "bearing_ins/so3.hpp"

namespace bearing_ins {

/// Ground-truth pose and velocity at one time instant.
struct RigidBodyState {
  double t = 0.0;  // s
  Vec3 p_I = Vec3::Zero();  // position, inertial frame (m)
  Vec3 v_I = Vec3::Zero();  // velocity, inertial frame (m/s)
  Rotation R;               // body-to-inertial attitude
};

/// One synchronized measurement set.
struct SensorFrame {
  double t = 0.0;
  Vec3 omega = Vec3::Zero();   // body rates (rad/s)
  Vec3 a_B = Vec3::Zero();     // specific force, body frame (m/s^2)
  Vec3 eta_B = Vec3::Zero();   // unit bearing to the landmark, body frame
  Vec3 m_B = Vec3::Zero();     // reference vector, body frame
};

/// Fixed world quantities. The reference vector and gravity must not be
/// collinear or the attitude reconstruction is ill-posed.
struct Environment {
  Vec3 g_I = Vec3(0.0, 0.0, 9.81);
  Vec3 m_I = Vec3(1.0 / std::numbers::sqrt2, 0.0, 1.0 / std::numbers::sqrt2);
  Vec3 p_landmark = Vec3::Zero();

  /// Throws std::invalid_argument when ||m_I|| != 1 or g_I x m_I ~ 0.
  void validate() const;
};

/// Analytic trajectory: position with its first two derivatives plus a
/// body-rate profile and the initial attitude.
struct TrajectorySpec {
  std::function<Vec3(double)> position;
  std::function<Vec3(double)> velocity;
  std::function<Vec3(double)> acceleration;
  std::function<Vec3(double)> angular_velocity;
  Rotation R0;
};

/// The eight-shaped benchmark trajectory with its body-rate profile.
TrajectorySpec figure_eight_trajectory();

/// Per-channel white-noise powers (variance per sample). The bearing is
/// renormalized after perturbation; the other channels are left as drawn.
struct NoiseSpec {
  double omega_power = 0.0;
  double accel_power = 0.0;
  double bearing_power = 0.0;
  double m_power = 0.0;
  std::uint64_t seed = 0;

  bool any() const {
    return omega_power > 0.0 || accel_power > 0.0 || bearing_power > 0.0 || m_power > 0.0;
  }
};

/// Evaluates a TrajectorySpec, integrating the attitude with exact
/// exponential steps on a fixed grid (step `step`). The attitude path is
/// cached per instance, so one instance must not be shared across threads.
class GroundTruth {
 public:
  GroundTruth(TrajectorySpec spec, Environment env, double step = 1e-3);

  /// State at time t >= 0. Off-grid times finish with one partial
  /// exponential step from the nearest cached grid point below.
  RigidBodyState state_at(double t) const;

  /// Analytic inertial acceleration (second derivative of position).
  Vec3 accel_inertial_at(double t) const { return spec_.acceleration(t); }

  const TrajectorySpec& spec() const { return spec_; }
  const Environment& env() const { return env_; }
  double step() const { return step_; }

 private:
  const Rotation& rotation_at_index(std::size_t k) const;

  TrajectorySpec spec_;
  Environment env_;
  double step_;
  mutable std::vector<Rotation> r_cache_;
};

/// Noise-free sensor synthesis. Throws std::domain_error when the vehicle
/// is within 1e-6 m of the landmark (undefined bearing).
SensorFrame synth_sensors(const RigidBodyState& state, const Vec3& accel_I, const Vec3& omega,
                          const Environment& env);

/// Noisy variant; draws a fixed number of normals per call so the stream
/// stays aligned across channel-power changes.
SensorFrame synth_sensors(const RigidBodyState& state, const Vec3& accel_I, const Vec3& omega,
                          const Environment& env, const NoiseSpec& noise, std::mt19937_64& rng);

struct TruthSample {
  RigidBodyState state;
  Vec3 accel_I;
  SensorFrame frame;
};

/// Uniformly sampled truth + sensors on [0, t_end]; floor(t_end/dt)+1
/// samples. Deterministic for a fixed NoiseSpec (seed included); the RNG
/// is untouched when all noise powers are zero.
std::vector<TruthSample> run_truth(const TrajectorySpec& spec, const Environment& env,
                                   const NoiseSpec& noise, double t_end, double dt);

}  // namespace bearing_ins
