#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kalrec/concept_space.hpp"
#include "kalrec/error.hpp"
#include "kalrec/profile_builder.hpp"

namespace kalrec {

/// Shape of the per-axis process-noise block.
enum class ProcessNoise {
  WhiteAcceleration,  // q * g g^T with g = (T^2/2, T, 1)
  Identity,           // q * I_3
};

/// Block layout of the 3d-dimensional state: all positions, then all
/// velocities, then all accelerations. Component `block` of axis `axis` sits
/// at block * d + axis.
inline Eigen::Index state_index(Eigen::Index dimension, Eigen::Index block, Eigen::Index axis) {
  return block * dimension + axis;
}

/// Constant-acceleration tracking model over a d-dimensional concept space.
///
/// Every matrix is the Kronecker product of a 3x3 per-axis block with I_d:
///   A = [[a I, T I, T^2/2 I], [0, a I, T I], [0, 0, a I]],  H = [I 0 0],
///   Q = Q_axis (x) I_d,  R = r I_d.
/// Immutable once built.
class TrackingModel {
 public:
  TrackingModel(Eigen::Index dimension, double interval, double alpha, double q, double r,
                ProcessNoise noise = ProcessNoise::WhiteAcceleration)
      : dimension_(dimension), interval_(interval), alpha_(alpha), q_(q), r_(r), noise_(noise) {
    detail::require(dimension >= 1, "tracking model: dimension must be >= 1");
    detail::require(std::isfinite(interval) && interval > 0.0, "tracking model: T must be > 0");
    detail::require(std::isfinite(alpha), "tracking model: alpha must be finite");
    detail::require(std::isfinite(q) && q >= 0.0, "tracking model: q must be >= 0");
    detail::require(std::isfinite(r) && r > 0.0,
                    "tracking model: r must be > 0 (the innovation covariance must be invertible)");

    const double t = interval;
    transition_block_ << alpha, t, 0.5 * t * t,
                         0.0, alpha, t,
                         0.0, 0.0, alpha;
    if (noise == ProcessNoise::WhiteAcceleration) {
      const Eigen::Vector3d g(0.5 * t * t, t, 1.0);
      noise_block_ = q * g * g.transpose();
    } else {
      noise_block_ = q * Eigen::Matrix3d::Identity();
    }

    const Eigen::Index n = state_size();
    transition_ = kron_identity(transition_block_);
    process_noise_ = kron_identity(noise_block_);
    measurement_ = Eigen::MatrixXd::Zero(dimension, n);
    measurement_.leftCols(dimension).setIdentity();
    measurement_noise_ = r * Eigen::MatrixXd::Identity(dimension, dimension);
  }

  Eigen::Index dimension() const { return dimension_; }
  Eigen::Index state_size() const { return 3 * dimension_; }
  double interval() const { return interval_; }
  double alpha() const { return alpha_; }
  double q() const { return q_; }
  double r() const { return r_; }
  ProcessNoise noise() const { return noise_; }

  const Eigen::Matrix3d& transition_block() const { return transition_block_; }
  const Eigen::Matrix3d& noise_block() const { return noise_block_; }

  const Eigen::MatrixXd& A() const { return transition_; }
  const Eigen::MatrixXd& H() const { return measurement_; }
  const Eigen::MatrixXd& Q() const { return process_noise_; }
  const Eigen::MatrixXd& R() const { return measurement_noise_; }

 private:
  Eigen::MatrixXd kron_identity(const Eigen::Matrix3d& block) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(state_size(), state_size());
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        if (block(i, j) == 0.0) continue;
        out.block(i * dimension_, j * dimension_, dimension_, dimension_)
            .diagonal()
            .setConstant(block(i, j));
      }
    }
    return out;
  }

  Eigen::Index dimension_;
  double interval_;
  double alpha_;
  double q_;
  double r_;
  ProcessNoise noise_;
  Eigen::Matrix3d transition_block_;
  Eigen::Matrix3d noise_block_;
  Eigen::MatrixXd transition_;
  Eigen::MatrixXd measurement_;
  Eigen::MatrixXd process_noise_;
  Eigen::MatrixXd measurement_noise_;
};

inline TrackingModel build_model(Eigen::Index dimension, double interval = 1.0, double alpha = 1.0,
                                 double q = 1e-3, double r = 1e-2,
                                 ProcessNoise noise = ProcessNoise::WhiteAcceleration) {
  return TrackingModel(dimension, interval, alpha, q, r, noise);
}

/// Stacked position / velocity / acceleration of a user in concept space.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Eigen::VectorXd stacked) : stacked_(std::move(stacked)) {
    detail::require(stacked_.size() % 3 == 0, "state vector length must be a multiple of 3");
  }

  static StateVector from_blocks(const Eigen::VectorXd& position, const Eigen::VectorXd& velocity,
                                 const Eigen::VectorXd& acceleration) {
    detail::require(position.size() == velocity.size() && position.size() == acceleration.size(),
                    "state vector blocks must share one dimension");
    Eigen::VectorXd stacked(3 * position.size());
    stacked << position, velocity, acceleration;
    return StateVector(std::move(stacked));
  }

  Eigen::Index dimension() const { return stacked_.size() / 3; }
  auto position() const { return stacked_.head(dimension()); }
  auto velocity() const { return stacked_.segment(dimension(), dimension()); }
  auto acceleration() const { return stacked_.tail(dimension()); }
  const Eigen::VectorXd& stacked() const { return stacked_; }
  Eigen::VectorXd& stacked() { return stacked_; }

 private:
  Eigen::VectorXd stacked_;
};

/// One-step-ahead predictor state: x_hat = X(k|k-1), P = P(k|k-1).
struct FilterState {
  StateVector x_hat;
  Eigen::MatrixXd P;
  std::size_t step = 0;
  std::optional<Eigen::VectorXd> last_innovation;
  std::optional<Eigen::MatrixXd> last_gain;
};

/// Smallest eigenvalue accepted for P before it is declared indefinite.
inline constexpr double kCovarianceTolerance = 1e-9;
/// Reciprocal condition number below which S = H P H^T + R counts as singular.
inline constexpr double kMinReciprocalCondition = 1e-12;

namespace detail {

inline void check_model_state(const TrackingModel& model, const FilterState& state) {
  require(state.x_hat.stacked().size() == model.state_size(), "filter state dimension does not match model");
  require(state.P.rows() == model.state_size() && state.P.cols() == model.state_size(),
          "filter covariance dimension does not match model");
}

/// Cholesky of P + tol*I succeeds iff every eigenvalue of P exceeds -tol.
template <typename Matrix>
bool is_psd_within(const Matrix& P, double tolerance) {
  using Plain = typename Matrix::PlainObject;
  Plain shifted = P;
  shifted.diagonal().array() += tolerance;
  Eigen::LLT<Plain> llt(shifted);
  return llt.info() == Eigen::Success;
}

}  // namespace detail

inline FilterState init_filter(const TrackingModel& model, const StateVector& x0, double p0 = 10.0) {
  detail::require(x0.stacked().size() == model.state_size(), "init_filter: initial state dimension mismatch");
  detail::require(x0.stacked().allFinite(), "init_filter: non-finite initial state");
  detail::require(std::isfinite(p0) && p0 > 0.0, "init_filter: p0 must be > 0");
  FilterState state;
  state.x_hat = x0;
  state.P = p0 * Eigen::MatrixXd::Identity(model.state_size(), model.state_size());
  return state;
}

/// Position from the first observation, zero velocity and acceleration, P = p0 I.
inline FilterState init_filter(const TrackingModel& model, const InterestVector& z0, double p0 = 10.0) {
  detail::require(z0.size() == model.dimension(),
                  "init_filter: observation has dimension " + std::to_string(z0.size()) +
                      ", model expects " + std::to_string(model.dimension()));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.dimension());
  return init_filter(model, StateVector::from_blocks(z0, zero, zero), p0);
}

/// Predictor gain K = A P H^T (H P H^T + R)^-1, solved against the Cholesky
/// factor of S rather than through an explicit inverse.
inline Eigen::MatrixXd gain(const TrackingModel& model, const Eigen::MatrixXd& P) {
  const Eigen::Index d = model.dimension();
  detail::require(P.rows() == model.state_size() && P.cols() == model.state_size(),
                  "gain: covariance dimension does not match model");
  const Eigen::MatrixXd S = P.topLeftCorner(d, d) + model.R();
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinReciprocalCondition)) {
    throw NumericalError("gain: innovation covariance is numerically singular");
  }
  // K^T = S^-1 (H P A^T); H P is the top block row of P.
  const Eigen::MatrixXd hpat = P.topRows(d) * model.A().transpose();
  return llt.solve(hpat).transpose();
}

/// Covariance recursion P+ = A P A^T - K H P A^T + Q for a precomputed gain.
inline Eigen::MatrixXd propagate_covariance(const TrackingModel& model, const Eigen::MatrixXd& P,
                                            const Eigen::MatrixXd& K) {
  const Eigen::Index d = model.dimension();
  const Eigen::MatrixXd& A = model.A();
  Eigen::MatrixXd next = A * P * A.transpose() - K * (P.topRows(d) * A.transpose()) + model.Q();
  return 0.5 * (next + next.transpose());
}

inline Eigen::MatrixXd propagate_covariance(const TrackingModel& model, const Eigen::MatrixXd& P) {
  return propagate_covariance(model, P, gain(model, P));
}

/// Consumes observation z_k and advances X(k|k-1) to X(k+1|k):
///   nu = z - H x_hat,  x_hat+ = A x_hat + K nu.
inline FilterState predict_step(const TrackingModel& model, const FilterState& state,
                                const InterestVector& z) {
  detail::check_model_state(model, state);
  detail::require(z.size() == model.dimension(),
                  "predict_step: observation has dimension " + std::to_string(z.size()) +
                      ", model expects " + std::to_string(model.dimension()));
  if (!z.allFinite() || !state.x_hat.stacked().allFinite() || !state.P.allFinite()) {
    throw NumericalError("predict_step: non-finite input at step " + std::to_string(state.step));
  }

  const Eigen::Index d = model.dimension();
  Eigen::MatrixXd K = gain(model, state.P);
  Eigen::VectorXd innovation = z - state.x_hat.stacked().head(d);

  FilterState next;
  next.x_hat = StateVector(model.A() * state.x_hat.stacked() + K * innovation);
  next.P = propagate_covariance(model, state.P, K);
  next.step = state.step + 1;
  if (!next.P.allFinite() || !detail::is_psd_within(next.P, kCovarianceTolerance)) {
    throw NumericalError("predict_step: covariance lost positive semi-definiteness at step " +
                         std::to_string(next.step) + " (filter divergence)");
  }
  next.last_innovation = std::move(innovation);
  next.last_gain = std::move(K);
  return next;
}

/// Quantities recorded when observation `step` is consumed. `predicted` is
/// the position of X(k|k-1), made before the observation was seen.
struct TrackStep {
  std::size_t step = 0;
  InterestVector predicted;
  InterestVector innovation;
  double gain_norm = 0.0;          // Frobenius norm of K_k
  double covariance_trace = 0.0;   // trace of P(k|k-1)
};

struct TrackRecord {
  std::string user_id;
  std::vector<TrackStep> steps;
  InterestVector next_prediction;  // position of X(K|K-1), the forecast after the last observation

  std::vector<InterestVector> predictions() const {
    std::vector<InterestVector> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.predicted);
    return out;
  }
};

namespace detail {

inline void check_series(const TrackingModel& model, const ProfileSeries& observations,
                         std::size_t minimum) {
  observations.validate(model.dimension());
  require(observations.size() >= minimum,
          "tracking '" + observations.user_id + "' needs at least " + std::to_string(minimum) +
              " observations, got " + std::to_string(observations.size()));
}

}  // namespace detail

/// Runs the dense predictor from an explicit initial state X(0|-1) = x0,
/// consuming every observation from Z_0 on.
inline TrackRecord track_from_state(const TrackingModel& model, const ProfileSeries& observations,
                                    const StateVector& x0, double p0 = 10.0) {
  detail::check_series(model, observations, 1);
  FilterState state = init_filter(model, x0, p0);
  TrackRecord record;
  record.user_id = observations.user_id;
  record.steps.reserve(observations.size());
  for (std::size_t k = 0; k < observations.size(); ++k) {
    TrackStep step;
    step.step = k;
    step.predicted = state.x_hat.position();
    step.covariance_trace = state.P.trace();
    state = predict_step(model, state, observations.profiles[k]);
    step.innovation = *state.last_innovation;
    step.gain_norm = state.last_gain->norm();
    record.steps.push_back(std::move(step));
  }
  record.next_prediction = state.x_hat.position();
  return record;
}

/// Initialises on the first observation and predicts each later one.
/// K observations yield K - 1 recorded predictions (steps 1 .. K-1).
inline TrackRecord track_series(const TrackingModel& model, const ProfileSeries& observations,
                                double p0 = 10.0) {
  detail::check_series(model, observations, 2);
  ProfileSeries rest;
  rest.user_id = observations.user_id;
  rest.instants.assign(observations.instants.begin() + 1, observations.instants.end());
  rest.profiles.assign(observations.profiles.begin() + 1, observations.profiles.end());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.dimension());
  TrackRecord record = track_from_state(
      model, rest, StateVector::from_blocks(observations.profiles.front(), zero, zero), p0);
  for (auto& s : record.steps) ++s.step;
  return record;
}

namespace detail {

/// Three-state filter for one genre axis with a scalar observation.
struct AxisFilter {
  Eigen::Vector3d x;
  Eigen::Matrix3d P;
};

}  // namespace detail

/// Same recursion as track_from_state, run as d independent 3-state filters.
/// Valid because A, H, Q and R are all block diagonal across axes.
inline TrackRecord track_from_state_decoupled(const TrackingModel& model,
                                              const ProfileSeries& observations,
                                              const StateVector& x0, double p0 = 10.0) {
  detail::check_series(model, observations, 1);
  detail::require(x0.stacked().size() == model.state_size(), "initial state dimension mismatch");
  detail::require(x0.stacked().allFinite(), "non-finite initial state");
  detail::require(std::isfinite(p0) && p0 > 0.0, "p0 must be > 0");

  const Eigen::Index d = model.dimension();
  const Eigen::Matrix3d& A = model.transition_block();
  const Eigen::Matrix3d& Q = model.noise_block();
  const double r = model.r();

  std::vector<detail::AxisFilter> axes(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    auto& f = axes[static_cast<std::size_t>(i)];
    f.x = Eigen::Vector3d(x0.stacked()[i], x0.stacked()[d + i], x0.stacked()[2 * d + i]);
    f.P = p0 * Eigen::Matrix3d::Identity();
  }

  TrackRecord record;
  record.user_id = observations.user_id;
  record.steps.reserve(observations.size());
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const InterestVector& z = observations.profiles[k];
    TrackStep step;
    step.step = k;
    step.predicted.resize(d);
    step.innovation.resize(d);
    double gain_sq = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      auto& f = axes[static_cast<std::size_t>(i)];
      step.predicted[i] = f.x[0];
      step.covariance_trace += f.P.trace();

      const double s = f.P(0, 0) + r;
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw NumericalError("gain: innovation variance of axis " + std::to_string(i) +
                             " is numerically singular");
      }
      const Eigen::RowVector3d hpat = f.P.row(0) * A.transpose();
      const Eigen::Vector3d K = hpat.transpose() / s;
      const double nu = z[i] - f.x[0];
      f.x = A * f.x + K * nu;
      Eigen::Matrix3d next = A * f.P * A.transpose() - K * hpat + Q;
      f.P = 0.5 * (next + next.transpose());
      if (!f.P.allFinite() || !f.x.allFinite() || !detail::is_psd_within(f.P, kCovarianceTolerance)) {
        throw NumericalError("covariance of axis " + std::to_string(i) +
                             " lost positive semi-definiteness at step " + std::to_string(k + 1));
      }
      step.innovation[i] = nu;
      gain_sq += K.squaredNorm();
    }
    step.gain_norm = std::sqrt(gain_sq);
    record.steps.push_back(std::move(step));
  }
  record.next_prediction.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) record.next_prediction[i] = axes[static_cast<std::size_t>(i)].x[0];
  return record;
}

inline TrackRecord track_series_decoupled(const TrackingModel& model, const ProfileSeries& observations,
                                          double p0 = 10.0) {
  detail::check_series(model, observations, 2);
  ProfileSeries rest;
  rest.user_id = observations.user_id;
  rest.instants.assign(observations.instants.begin() + 1, observations.instants.end());
  rest.profiles.assign(observations.profiles.begin() + 1, observations.profiles.end());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.dimension());
  TrackRecord record = track_from_state_decoupled(
      model, rest, StateVector::from_blocks(observations.profiles.front(), zero, zero), p0);
  for (auto& s : record.steps) ++s.step;
  return record;
}

}  // namespace kalrec
