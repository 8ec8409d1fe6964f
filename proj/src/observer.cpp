#include "bearing_ins/observer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bearing_ins {

namespace {

constexpr double kTimeTol = 1e-9;

void check_spd(const Eigen::MatrixXd& P, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().minCoeff();
    std::ostringstream msg;
    msg << who << ": P lost positive definiteness (min eigenvalue " << min_eig << ")";
    throw std::runtime_error(msg.str());
  }
}

bool block_diagonal_9_3(const Eigen::MatrixXd& m, double tol) {
  return m.rows() == 12 && m.cols() == 12 &&
         m.topRightCorner(9, 3).cwiseAbs().maxCoeff() <= tol &&
         m.bottomLeftCorner(3, 9).cwiseAbs().maxCoeff() <= tol;
}

bool block_diagonal_3_3(const Eigen::MatrixXd& m, double tol) {
  return m.rows() == 6 && m.cols() == 6 &&
         m.topRightCorner(3, 3).cwiseAbs().maxCoeff() <= tol &&
         m.bottomLeftCorner(3, 3).cwiseAbs().maxCoeff() <= tol;
}

void require_spd_input(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + ": must be square");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument(std::string(name) + ": must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(name) + ": must be positive definite");
  }
}

}  // namespace

int state_dim(Variant v) { return v == Variant::reduced ? 9 : 12; }
int output_dim(Variant v) { return v == Variant::reduced ? 3 : 6; }

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::decoupled: return "decoupled";
    case Variant::reduced: return "reduced";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "decoupled") return Variant::decoupled;
  if (s == "reduced") return Variant::reduced;
  throw std::invalid_argument("unknown observer variant '" + s +
                              "' (expected full, decoupled or reduced)");
}

LtvMatrices build_matrices(const Vec3& omega, const Vec3& eta_B, Variant variant) {
  const double n_eta = eta_B.norm();
  if (n_eta <= 1e-9) {
    throw std::invalid_argument("build_matrices: zero bearing vector");
  }
  const Vec3 eta = eta_B / n_eta;
  const Mat3 wx = skew(omega);
  const Mat3 pi_eta = projector(eta);
  const int n = state_dim(variant);
  const int p = output_dim(variant);
  const int blocks = n / 3;

  LtvMatrices m;
  m.A = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < blocks; ++b) m.A.block<3, 3>(3 * b, 3 * b) = -wx;
  m.A.block<3, 3>(0, 3) = Mat3::Identity();  // p' sees v
  m.A.block<3, 3>(3, 6) = Mat3::Identity();  // v' sees g

  m.B = Eigen::MatrixXd::Zero(n, 3);
  m.B.block<3, 3>(3, 0) = Mat3::Identity();

  m.C = Eigen::MatrixXd::Zero(p, n);
  m.C.block<3, 3>(0, 0) = pi_eta;
  if (variant != Variant::reduced) {
    m.C.block<3, 3>(3, 9) = Mat3::Identity();
  }
  return m;
}

void ObserverConfig::validate() const {
  const int n = state_dim(variant);
  const int p = output_dim(variant);
  if (P0.rows() != n || P0.cols() != n) {
    throw std::invalid_argument("observer config: P0 must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
  if (V.rows() != n || V.cols() != n) {
    throw std::invalid_argument("observer config: V must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
  if (Q.rows() != p || Q.cols() != p) {
    throw std::invalid_argument("observer config: Q must be " + std::to_string(p) + "x" +
                                std::to_string(p));
  }
  if (!(dt > 0.0)) throw std::invalid_argument("observer config: dt must be positive");
  require_spd_input(P0, "observer config: P0");
  require_spd_input(V, "observer config: V");
  require_spd_input(Q, "observer config: Q");
  if (variant == Variant::decoupled) {
    if (!block_diagonal_9_3(P0, 1e-12) || !block_diagonal_9_3(V, 1e-12) ||
        !block_diagonal_3_3(Q, 1e-12)) {
      throw std::invalid_argument(
          "observer config: decoupled variant requires block-diagonal (9+3) P0, V and Q");
    }
  }
}

Vec3 ObserverState::m_B() const {
  if (x_hat.size() < 12) {
    throw std::logic_error("ObserverState: 9-state variant has no m estimate");
  }
  return x_hat.segment<3>(9);
}

void ObserverState::validate(double tol) const {
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw std::runtime_error("ObserverState: P is not symmetric");
  }
  check_spd(P, "ObserverState");
}

ObserverState make_observer_state(const ObserverConfig& cfg, const Eigen::VectorXd& x0,
                                  double t0) {
  cfg.validate();
  const int n = state_dim(cfg.variant);
  if (x0.size() != n) {
    throw std::invalid_argument("make_observer_state: x0 must have " + std::to_string(n) +
                                " entries, got " + std::to_string(x0.size()));
  }
  ObserverState s;
  s.x_hat = x0;
  s.P = cfg.P0;
  s.t = t0;
  return s;
}

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, const LtvMatrices& at_start,
                             const LtvMatrices& at_mid, const LtvMatrices& at_end,
                             const Eigen::MatrixXd& V, const Eigen::MatrixXd& Q, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("riccati_step: dt must be positive");

  const Eigen::MatrixXd s0 = at_start.C.transpose() * Q * at_start.C;
  const Eigen::MatrixXd sm = at_mid.C.transpose() * Q * at_mid.C;
  const Eigen::MatrixXd s1 = at_end.C.transpose() * Q * at_end.C;

  const auto rhs = [&V](const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                        const Eigen::MatrixXd& S) -> Eigen::MatrixXd {
    return A * X + X * A.transpose() - X * S * X + V;
  };

  const Eigen::MatrixXd k1 = rhs(P, at_start.A, s0);
  const Eigen::MatrixXd k2 = rhs(P + (0.5 * dt) * k1, at_mid.A, sm);
  const Eigen::MatrixXd k3 = rhs(P + (0.5 * dt) * k2, at_mid.A, sm);
  const Eigen::MatrixXd k4 = rhs(P + dt * k3, at_end.A, s1);

  Eigen::MatrixXd next = P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next = (0.5 * (next + next.transpose())).eval();
  check_spd(next, "riccati_step");
  return next;
}

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, const LtvMatrices& mats,
                             const Eigen::MatrixXd& V, const Eigen::MatrixXd& Q, double dt) {
  return riccati_step(P, mats, mats, mats, V, Q, dt);
}

Eigen::MatrixXd observer_gain(const Eigen::MatrixXd& P, const LtvMatrices& mats,
                              const Eigen::MatrixXd& Q, Variant variant) {
  if (variant == Variant::decoupled) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(12, 6);
    K.topLeftCorner(9, 3) =
        P.topLeftCorner(9, 9) * mats.C.block(0, 0, 3, 9).transpose() * Q.topLeftCorner(3, 3);
    K.bottomRightCorner(3, 3) = P.bottomRightCorner(3, 3) * Q.bottomRightCorner(3, 3);
    return K;
  }
  return P * mats.C.transpose() * Q;
}

Eigen::VectorXd measurement_vector(Variant variant, const SensorFrame& frame) {
  if (variant == Variant::reduced) {
    return Eigen::VectorXd::Zero(3);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  y.tail<3>() = frame.m_B;
  return y;
}

ObserverState observer_step(const ObserverState& s, const SensorFrame& at_start,
                            const SensorFrame& at_mid, const SensorFrame& at_end,
                            const ObserverConfig& cfg) {
  const double dt = cfg.dt;
  if (std::abs(at_start.t - s.t) > kTimeTol || std::abs(at_mid.t - (s.t + 0.5 * dt)) > kTimeTol ||
      std::abs(at_end.t - (s.t + dt)) > kTimeTol) {
    std::ostringstream msg;
    msg << "observer_step: frames at " << at_start.t << ", " << at_mid.t << ", " << at_end.t
        << " do not bracket the step from " << s.t << " with dt " << dt;
    throw std::invalid_argument(msg.str());
  }
  const int n = state_dim(cfg.variant);
  if (s.x_hat.size() != n) {
    throw std::invalid_argument("observer_step: state size does not match the variant");
  }

  const LtvMatrices m0 = build_matrices(at_start.omega, at_start.eta_B, cfg.variant);
  const LtvMatrices mm = build_matrices(at_mid.omega, at_mid.eta_B, cfg.variant);
  const LtvMatrices m1 = build_matrices(at_end.omega, at_end.eta_B, cfg.variant);

  const Eigen::MatrixXd V = cfg.V_fn ? cfg.V_fn(s.t) : cfg.V;
  const Eigen::MatrixXd Q = cfg.Q_fn ? cfg.Q_fn(s.t) : cfg.Q;
  const Eigen::MatrixXd K = observer_gain(s.P, m0, Q, cfg.variant);

  const auto rhs = [&](const Eigen::VectorXd& x, const LtvMatrices& m,
                       const SensorFrame& f) -> Eigen::VectorXd {
    return m.A * x + m.B * f.a_B + K * (measurement_vector(cfg.variant, f) - m.C * x);
  };

  const Eigen::VectorXd k1 = rhs(s.x_hat, m0, at_start);
  const Eigen::VectorXd k2 = rhs(s.x_hat + (0.5 * dt) * k1, mm, at_mid);
  const Eigen::VectorXd k3 = rhs(s.x_hat + (0.5 * dt) * k2, mm, at_mid);
  const Eigen::VectorXd k4 = rhs(s.x_hat + dt * k3, m1, at_end);

  ObserverState out;
  out.x_hat = s.x_hat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.P = riccati_step(s.P, m0, mm, m1, V, Q, dt);
  out.t = at_end.t;
  return out;
}

ObserverState observer_step(const ObserverState& s, const SensorFrame& frame,
                            const ObserverConfig& cfg) {
  if (std::abs(frame.t - (s.t + cfg.dt)) > kTimeTol) {
    throw std::invalid_argument("observer_step: frame.t must equal s.t + cfg.dt");
  }
  SensorFrame start = frame;
  start.t = s.t;
  SensorFrame mid = frame;
  mid.t = s.t + 0.5 * cfg.dt;
  return observer_step(s, start, mid, frame, cfg);
}

AttitudeReconstruction reconstruct_attitude(const Vec3& g_hat_B, const Vec3& m_hat_B,
                                            const Environment& env) {
  env.validate();
  const Vec3 cross_B = g_hat_B.cross(m_hat_B);
  if (cross_B.norm() <= 1e-6) {
    throw std::domain_error(
        "reconstruct_attitude: estimated gravity and reference vector are (near-)collinear");
  }
  const Vec3 cross_I = env.g_I.cross(env.m_I);
  const Vec3 dbl_I = env.g_I.cross(cross_I);

  Mat3 body;  // [g, g x m, g x (g x m)] from the estimates, scaled by the
              // inertial norms so exact inputs reproduce the attitude.
  body.col(0) = g_hat_B / env.g_I.norm();
  body.col(1) = cross_B / cross_I.norm();
  body.col(2) = g_hat_B.cross(cross_B) / dbl_I.norm();

  Mat3 ref;
  ref.col(0) = env.g_I / env.g_I.norm();
  ref.col(1) = cross_I / cross_I.norm();
  ref.col(2) = dbl_I / dbl_I.norm();

  AttitudeReconstruction out;
  out.raw = ref * body.transpose();  // transpose of body * ref^T
  out.projected = project_to_rotation(out.raw);
  return out;
}

RollPitch roll_pitch_from_gravity(const Vec3& g_hat_B) {
  if (g_hat_B.norm() <= 1e-6) {
    throw std::domain_error("roll_pitch_from_gravity: gravity estimate is near zero");
  }
  RollPitch rp;
  rp.theta = std::atan2(-g_hat_B.x(), std::sqrt(g_hat_B.y() * g_hat_B.y() +
                                                g_hat_B.z() * g_hat_B.z()));
  rp.phi = std::atan2(g_hat_B.y(), g_hat_B.z());
  return rp;
}

InertialEstimate recover_inertial(const ObserverState& s, const Rotation& R_hat,
                                  const Environment& env) {
  InertialEstimate e;
  e.p_I = R_hat * s.p_B() + env.p_landmark;
  e.v_I = R_hat * s.v_B();
  return e;
}

}  // namespace bearing_ins
