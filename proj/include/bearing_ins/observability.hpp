// Observability tooling for the body-frame LTV pair: transition matrices,
// windowed observability Gramians, persistency-of-excitation margins, and
// the rotation-factorized Gramian used as an independent cross-check.
#pragma once

#include <cstddef>
#include <vector>

#include "bearing_ins/observer.hpp"
#include "bearing_ins/simulator.hpp"

namespace bearing_ins {

/// PE verdict threshold on the averaged bearing-projector eigenvalue;
/// chosen above the quadrature noise floor.
inline constexpr double kPeThreshold = 1e-4;

/// Windowed observability Gramian summary for [t_start, t_start + delta].
struct GramianReport {
  double t_start = 0.0;
  double delta = 0.0;
  Eigen::MatrixXd W;
  double min_eig = 0.0;
  double mu_pe = 0.0;        // min eigenvalue of the averaged bearing projector
  bool pe_satisfied = false; // mu_pe > kPeThreshold
};

/// Unit inertial-frame bearing samples on a uniform grid.
struct BearingTrack {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vec3> eta_I;
};

/// System matrices plus ground-truth attitude and inertial bearing sampled
/// on a uniform half-step grid (spacing dt/2), so RK4 steps of length dt
/// have exact stage values.
class LtvTrajectory {
 public:
  struct Sample {
    LtvMatrices mats;
    Rotation R;
    Vec3 eta_I = Vec3::UnitX();
  };

  /// `samples` at t0 + j*dt/2 for j = 0..2N.
  LtvTrajectory(Variant variant, double t0, double dt, std::vector<Sample> samples);

  static LtvTrajectory from_truth(const GroundTruth& truth, Variant variant, double t0,
                                  double t_end, double dt);

  Variant variant() const { return variant_; }
  int state_dim() const { return bearing_ins::state_dim(variant_); }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  double t_end() const { return t0_ + dt_ * static_cast<double>(node_count() - 1); }
  std::size_t node_count() const { return (samples_.size() + 1) / 2; }

  const Sample& at_half(std::size_t j) const { return samples_.at(j); }
  const Sample& at_node(std::size_t k) const { return samples_.at(2 * k); }

  /// Grid index of time t; throws std::out_of_range when t is off the node
  /// grid or outside the sampled horizon.
  std::size_t node_index(double t) const;

  BearingTrack bearing_track() const;

 private:
  Variant variant_;
  double t0_;
  double dt_;
  std::vector<Sample> samples_;
};

/// Transition matrix phi(s, t) of x' = A(tau) x: d/ds phi(s,t) = A(s) phi(s,t),
/// phi(t,t) = I. Integrated by RK4 at the node step in either direction.
Eigen::MatrixXd transition_matrix(const LtvTrajectory& traj, double s, double t);

/// Windowed Gramian (1/delta) * integral of phi^T C^T C phi over
/// [t, t+delta], by trapezoidal quadrature at the node step.
GramianReport gramian(const LtvTrajectory& traj, double t, double delta);

/// Minimum eigenvalue of the averaged bearing projector over [t, t+delta]
/// (trapezoidal). Samples must be unit within 1e-6.
double pe_margin(const BearingTrack& track, double t, double delta);

/// The same Gramian through the rotation change of variables: constant
/// nilpotent-chain transition in the rotated coordinates sandwiched by
/// block-diagonal attitude matrices, with the bearing projector expressed
/// in the inertial frame. Independent of transition_matrix(); agreement
/// with gramian() is the module's primary cross-check.
Eigen::MatrixXd gramian_via_factorization(const LtvTrajectory& traj, double t, double delta);

}  // namespace bearing_ins
