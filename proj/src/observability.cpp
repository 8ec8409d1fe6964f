#include "bearing_ins/observability.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bearing_ins {

namespace {

constexpr double kGridSnap = 1e-9;

// One RK4 step of phi' = A(tau) phi over [tau, tau + h] with exact stage
// matrices (h may be negative).
Eigen::MatrixXd rk4_phi_step(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& a0,
                             const Eigen::MatrixXd& am, const Eigen::MatrixXd& a1, double h) {
  const Eigen::MatrixXd k1 = a0 * phi;
  const Eigen::MatrixXd k2 = am * (phi + (0.5 * h) * k1);
  const Eigen::MatrixXd k3 = am * (phi + (0.5 * h) * k2);
  const Eigen::MatrixXd k4 = a1 * (phi + h * k3);
  return phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// exp(Abar * tau) for the constant chain p <- v <- g (remaining blocks
// isolated): polynomial in tau because the chain is nilpotent.
Eigen::MatrixXd chain_transition(int n, double tau) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  phi.block<3, 3>(0, 3) = tau * Mat3::Identity();
  phi.block<3, 3>(3, 6) = tau * Mat3::Identity();
  phi.block<3, 3>(0, 6) = (0.5 * tau * tau) * Mat3::Identity();
  return phi;
}

Mat3 unit_projector(const Vec3& eta, const char* who) {
  const double n = eta.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << who << ": bearing sample must be unit-norm, got " << n;
    throw std::invalid_argument(msg.str());
  }
  return projector(eta / n);
}

std::size_t window_steps(double delta, double dt, const char* who) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": delta must be positive");
  }
  const double steps = delta / dt;
  const auto n = static_cast<std::size_t>(std::llround(steps));
  if (n == 0 || std::abs(steps - static_cast<double>(n)) > 1e-6) {
    std::ostringstream msg;
    msg << who << ": delta (" << delta << ") must be a positive multiple of the sample step ("
        << dt << ")";
    throw std::invalid_argument(msg.str());
  }
  return n;
}

}  // namespace

LtvTrajectory::LtvTrajectory(Variant variant, double t0, double dt, std::vector<Sample> samples)
    : variant_(variant), t0_(t0), dt_(dt), samples_(std::move(samples)) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("LtvTrajectory: dt must be positive");
  if (samples_.size() < 3 || samples_.size() % 2 == 0) {
    throw std::invalid_argument(
        "LtvTrajectory: needs an odd number (>= 3) of half-step samples");
  }
  const int n = state_dim();
  for (const auto& s : samples_) {
    if (s.mats.A.rows() != n || s.mats.A.cols() != n) {
      throw std::invalid_argument("LtvTrajectory: sample dimensions do not match the variant");
    }
  }
}

LtvTrajectory LtvTrajectory::from_truth(const GroundTruth& truth, Variant variant, double t0,
                                        double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("LtvTrajectory: dt must be positive");
  if (!(t_end > t0)) throw std::invalid_argument("LtvTrajectory: t_end must exceed t0");
  const auto n_nodes = static_cast<std::size_t>(std::floor((t_end - t0) / dt + kGridSnap)) + 1;

  std::vector<Sample> samples;
  samples.reserve(2 * n_nodes - 1);
  for (std::size_t j = 0; j + 1 < 2 * n_nodes; ++j) {
    const double t = t0 + 0.5 * dt * static_cast<double>(j);
    const RigidBodyState state = truth.state_at(t);
    const Vec3 rel = state.p_I - truth.env().p_landmark;
    const double range = rel.norm();
    if (range <= 1e-6) {
      throw std::domain_error("LtvTrajectory: bearing undefined at t = " + std::to_string(t));
    }
    Sample s;
    s.eta_I = rel / range;
    s.R = state.R;
    const Vec3 eta_B = state.R.inverse() * s.eta_I;
    s.mats = build_matrices(truth.spec().angular_velocity(t), eta_B, variant);
    samples.push_back(std::move(s));
  }
  return LtvTrajectory(variant, t0, dt, std::move(samples));
}

std::size_t LtvTrajectory::node_index(double t) const {
  const double offset = (t - t0_) / dt_;
  const auto k = static_cast<std::size_t>(std::llround(offset));
  if (offset < -kGridSnap || std::abs(offset - static_cast<double>(k)) > 1e-6 ||
      k >= node_count()) {
    std::ostringstream msg;
    msg << "LtvTrajectory: t = " << t << " is off the sampled node grid [" << t0_ << ", "
        << t_end() << "] step " << dt_;
    throw std::out_of_range(msg.str());
  }
  return k;
}

BearingTrack LtvTrajectory::bearing_track() const {
  BearingTrack track;
  track.t0 = t0_;
  track.dt = dt_;
  track.eta_I.reserve(node_count());
  for (std::size_t k = 0; k < node_count(); ++k) track.eta_I.push_back(at_node(k).eta_I);
  return track;
}

Eigen::MatrixXd transition_matrix(const LtvTrajectory& traj, double s, double t) {
  const std::size_t ks = traj.node_index(s);
  const std::size_t kt = traj.node_index(t);
  const int n = traj.state_dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  if (ks == kt) return phi;

  const double h = (ks > kt) ? traj.dt() : -traj.dt();
  std::size_t k = kt;
  while (k != ks) {
    const std::size_t next = (ks > kt) ? k + 1 : k - 1;
    const std::size_t j0 = 2 * k;
    const std::size_t j1 = 2 * next;
    const std::size_t jm = (j0 + j1) / 2;
    phi = rk4_phi_step(phi, traj.at_half(j0).mats.A, traj.at_half(jm).mats.A,
                       traj.at_half(j1).mats.A, h);
    k = next;
  }
  return phi;
}

GramianReport gramian(const LtvTrajectory& traj, double t, double delta) {
  const std::size_t n_steps = window_steps(delta, traj.dt(), "gramian");
  const std::size_t k0 = traj.node_index(t);
  if (k0 + n_steps >= traj.node_count()) {
    throw std::out_of_range("gramian: window [t, t+delta] exceeds the sampled horizon");
  }

  const int n = traj.state_dim();
  const double dt = traj.dt();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);

  for (std::size_t i = 0; i <= n_steps; ++i) {
    const std::size_t k = k0 + i;
    const Eigen::MatrixXd& c = traj.at_node(k).mats.C;
    const Eigen::MatrixXd cphi = c * phi;
    const double weight = (i == 0 || i == n_steps) ? 0.5 : 1.0;
    acc.noalias() += weight * (cphi.transpose() * cphi);
    if (i < n_steps) {
      const std::size_t j0 = 2 * k;
      phi = rk4_phi_step(phi, traj.at_half(j0).mats.A, traj.at_half(j0 + 1).mats.A,
                         traj.at_half(j0 + 2).mats.A, dt);
    }
  }

  GramianReport report;
  report.t_start = t;
  report.delta = delta;
  report.W = (acc * (dt / delta)).eval();
  report.W = (0.5 * (report.W + report.W.transpose())).eval();
  report.min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(report.W).eigenvalues().minCoeff();
  report.mu_pe = pe_margin(traj.bearing_track(), t, delta);
  report.pe_satisfied = report.mu_pe > kPeThreshold;
  return report;
}

double pe_margin(const BearingTrack& track, double t, double delta) {
  if (!(track.dt > 0.0)) throw std::invalid_argument("pe_margin: track step must be positive");
  const std::size_t n_steps = window_steps(delta, track.dt, "pe_margin");

  const double offset = (t - track.t0) / track.dt;
  const auto k0 = static_cast<std::size_t>(std::llround(offset));
  if (offset < -kGridSnap || std::abs(offset - static_cast<double>(k0)) > 1e-6 ||
      k0 + n_steps >= track.eta_I.size()) {
    throw std::out_of_range("pe_margin: window [t, t+delta] is off the sampled grid");
  }

  Mat3 acc = Mat3::Zero();
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double weight = (i == 0 || i == n_steps) ? 0.5 : 1.0;
    acc += weight * unit_projector(track.eta_I[k0 + i], "pe_margin");
  }
  Mat3 avg = acc * (track.dt / delta);
  avg = (0.5 * (avg + avg.transpose())).eval();
  return Eigen::SelfAdjointEigenSolver<Mat3>(avg).eigenvalues().minCoeff();
}

Eigen::MatrixXd gramian_via_factorization(const LtvTrajectory& traj, double t, double delta) {
  const std::size_t n_steps = window_steps(delta, traj.dt(), "gramian_via_factorization");
  const std::size_t k0 = traj.node_index(t);
  if (k0 + n_steps >= traj.node_count()) {
    throw std::out_of_range(
        "gramian_via_factorization: window [t, t+delta] exceeds the sampled horizon");
  }

  const int n = traj.state_dim();
  const bool has_vector_output = traj.variant() != Variant::reduced;
  const double dt = traj.dt();

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const LtvTrajectory::Sample& sample = traj.at_node(k0 + i);
    const double tau = dt * static_cast<double>(i);

    // Integrand in rotated coordinates: the projector acts on the position
    // chain through the polynomial transition; the vector output adds a
    // constant identity block.
    Eigen::MatrixXd mid = Eigen::MatrixXd::Zero(n, n);
    mid.topLeftCorner<3, 3>() = unit_projector(sample.eta_I, "gramian_via_factorization");
    if (has_vector_output) mid.block<3, 3>(9, 9) = Mat3::Identity();

    const Eigen::MatrixXd phi_bar = chain_transition(n, tau);
    const double weight = (i == 0 || i == n_steps) ? 0.5 : 1.0;
    acc.noalias() += weight * (phi_bar.transpose() * mid * phi_bar);
  }

  const int blocks = n / 3;
  const Mat3& r_t = traj.at_node(k0).R.matrix();
  Eigen::MatrixXd t_blockdiag = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < blocks; ++b) t_blockdiag.block<3, 3>(3 * b, 3 * b) = r_t;

  Eigen::MatrixXd w =
      t_blockdiag.transpose() * (acc * (dt / delta)) * t_blockdiag;
  return (0.5 * (w + w.transpose())).eval();
}

}  // namespace bearing_ins
