// Riccati observer family over the body-frame state chain
// (position, velocity, gravity[, reference vector]), plus algebraic
// attitude reconstruction and inertial-state recovery.
#pragma once

#include <functional>

#include "bearing_ins/simulator.hpp"
#include "bearing_ins/so3.hpp"

namespace bearing_ins {

/// full      - 12 states (p, v, g, m), bearing + vector outputs, dense gain.
/// decoupled - 12 states with block-diagonal tuning and a block gain, so the
///             (p, v, g) estimates never see the m block.
/// reduced   - 9 states (p, v, g), bearing output only.
enum class Variant { full, decoupled, reduced };

int state_dim(Variant v);   // 12, 12, 9
int output_dim(Variant v);  // 6, 6, 3

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// System matrices of the body-frame linear time-varying model at one
/// time instant.
struct LtvMatrices {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x 3
  Eigen::MatrixXd C;  // p x n
};

/// Builds A, B, C from the body rates and the (unit) bearing measurement.
/// The bearing is renormalized internally; a zero bearing is rejected.
LtvMatrices build_matrices(const Vec3& omega, const Vec3& eta_B, Variant variant);

struct ObserverConfig {
  Variant variant = Variant::reduced;
  Eigen::MatrixXd P0;  // initial Riccati matrix, n x n, SPD
  Eigen::MatrixXd V;   // process weight, n x n
  Eigen::MatrixXd Q;   // output weight, p x p
  double dt = 1e-3;    // step (the sensor stream runs at dt/2)
  Vec3 g_I = Vec3(0.0, 0.0, 9.81);
  Vec3 m_I = Vec3(1.0 / std::numbers::sqrt2, 0.0, 1.0 / std::numbers::sqrt2);

  // Optional time-varying weights; when set they are evaluated at the
  // start of each step and override V / Q.
  std::function<Eigen::MatrixXd(double)> V_fn;
  std::function<Eigen::MatrixXd(double)> Q_fn;

  /// Dimension and definiteness checks; the decoupled variant additionally
  /// requires block-diagonal (9+3) P0, V and Q.
  void validate() const;
};

struct ObserverState {
  Eigen::VectorXd x_hat;  // body-frame estimate (9 or 12 entries)
  Eigen::MatrixXd P;      // Riccati matrix
  double t = 0.0;

  Vec3 p_B() const { return x_hat.segment<3>(0); }
  Vec3 v_B() const { return x_hat.segment<3>(3); }
  Vec3 g_B() const { return x_hat.segment<3>(6); }
  Vec3 m_B() const;  // throws for the 9-state variant

  /// Symmetry within `tol` and positive definiteness.
  void validate(double tol = 1e-9) const;
};

/// Initial observer state from a validated config and x_hat(0).
ObserverState make_observer_state(const ObserverConfig& cfg, const Eigen::VectorXd& x0,
                                  double t0 = 0.0);

/// One RK4 step of P' = A P + P A^T - P C^T Q C P + V with the matrices
/// frozen over the step, followed by symmetrization. Throws
/// std::runtime_error (naming the minimum eigenvalue) if the result is
/// not positive definite.
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, const LtvMatrices& mats,
                             const Eigen::MatrixXd& V, const Eigen::MatrixXd& Q, double dt);

/// Same step with the matrices refreshed at the RK4 stage times
/// (start / midpoint / end of the step).
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, const LtvMatrices& at_start,
                             const LtvMatrices& at_mid, const LtvMatrices& at_end,
                             const Eigen::MatrixXd& V, const Eigen::MatrixXd& Q, double dt);

/// Gain K = P C^T Q; the decoupled variant assembles the block form
/// blkdiag(P1 C1^T Q1, P2 Q2) instead.
Eigen::MatrixXd observer_gain(const Eigen::MatrixXd& P, const LtvMatrices& mats,
                              const Eigen::MatrixXd& Q, Variant variant);

/// Measured output vector: [0; m_B] for the 12-state variants (the bearing
/// output is the virtual zero), plain zero for the 9-state variant.
Eigen::VectorXd measurement_vector(Variant variant, const SensorFrame& frame);

/// Advances the estimate and the Riccati matrix by one RK4 step of length
/// cfg.dt. The three frames must be sampled at s.t, s.t + dt/2 and
/// s.t + dt (within 1e-9): the RK4 stages consume exact sensor samples,
/// which keeps the discretization error far below the measurement scale.
/// The gain is frozen over the step from (P, C) at the start.
ObserverState observer_step(const ObserverState& s, const SensorFrame& at_start,
                            const SensorFrame& at_mid, const SensorFrame& at_end,
                            const ObserverConfig& cfg);

/// Zero-order-hold convenience: the single frame (at s.t + dt) is used for
/// every RK4 stage. First-order accurate; prefer the three-frame form.
ObserverState observer_step(const ObserverState& s, const SensorFrame& frame,
                            const ObserverConfig& cfg);

struct AttitudeReconstruction {
  Mat3 raw;            // algebraic estimate; off the group during transients
  Rotation projected;  // polar projection of `raw`
};

/// Algebraic attitude from the estimated body-frame gravity and reference
/// vector. Throws std::domain_error when the two are (near-)collinear.
AttitudeReconstruction reconstruct_attitude(const Vec3& g_hat_B, const Vec3& m_hat_B,
                                            const Environment& env);

struct RollPitch {
  double theta = 0.0;  // pitch, [-pi/2, pi/2]
  double phi = 0.0;    // roll, (-pi, pi]
};

/// Pitch and roll from the body-frame gravity estimate (ZYX convention).
RollPitch roll_pitch_from_gravity(const Vec3& g_hat_B);

struct InertialEstimate {
  Vec3 p_I;
  Vec3 v_I;
};

/// Rotates the body-frame estimates back to the inertial frame and
/// restores the landmark offset.
InertialEstimate recover_inertial(const ObserverState& s, const Rotation& R_hat,
                                  const Environment& env);

}  // namespace bearing_ins
