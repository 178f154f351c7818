#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aoisched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RiccatiSolution {
  Matrix P;
  Matrix gain;  // L* such that u = -L* x
  int iterations = 0;
};

namespace detail {

inline void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw std::invalid_argument(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

// (R + B'PB)^{-1} B'PA, rejecting a singular inner matrix.
inline Matrix feedback_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P) {
  const Matrix inner = R + B.transpose() * P * B;
  Eigen::FullPivLU<Matrix> lu(inner);
  if (!lu.isInvertible()) throw SynthesisError("R + B'PB is singular");
  return lu.solve(B.transpose() * P * A);
}

}  // namespace detail

// Infinite-horizon LQR gain by fixed-point iteration of the discrete Riccati
// equation, starting from P = Q.
inline RiccatiSolution solve_riccati(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                     double tol = 1e-10, int max_iter = 1'000'000) {
  const Eigen::Index n = A.rows();
  detail::require_square(A, n, "A");
  detail::require_square(Q, n, "Q");
  if (B.rows() != n) throw std::invalid_argument("B must have as many rows as A");
  detail::require_square(R, B.cols(), "R");

  Matrix P = Q;
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix gain = detail::feedback_gain(A, B, R, P);
    Matrix next = Q + A.transpose() * P * A - A.transpose() * P * B * gain;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw SynthesisError("Riccati iteration diverged; (A, B) may not be stabilizable");
    const double residual = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (residual < tol) return {P, detail::feedback_gain(A, B, R, P), it};
  }
  throw SynthesisError("Riccati iteration did not converge within " + std::to_string(max_iter) + " iterations");
}

// Linear time-invariant plant with noise covariance and LQR weights.
class PlantModel {
 public:
  PlantModel(Matrix A, Matrix B, Matrix sigma, Matrix Q, Matrix R)
      : A_(std::move(A)), B_(std::move(B)), sigma_(std::move(sigma)), Q_(std::move(Q)), R_(std::move(R)) {
    const Eigen::Index n = A_.rows();
    detail::require_square(A_, n, "A");
    detail::require_square(sigma_, n, "Sigma");
    detail::require_square(Q_, n, "Q");
    if (B_.rows() != n) throw std::invalid_argument("B must have as many rows as A");
    detail::require_square(R_, B_.cols(), "R");
    check_psd(sigma_, "Sigma");
    check_psd(Q_, "Q");
    check_psd(R_, "R");

    riccati_ = solve_riccati(A_, B_, Q_, R_);

    // Noise factor S with S S' = Sigma; eigen-based so singular Sigma is fine.
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_);
    noise_factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  static PlantModel scalar(double a, double b, double sigma, double q, double r) {
    return PlantModel(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, sigma),
                      Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r));
  }

  Eigen::Index states() const noexcept { return A_.rows(); }
  Eigen::Index inputs() const noexcept { return B_.cols(); }
  const Matrix& A() const noexcept { return A_; }
  const Matrix& B() const noexcept { return B_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const Matrix& Q() const noexcept { return Q_; }
  const Matrix& R() const noexcept { return R_; }
  const Matrix& riccati() const noexcept { return riccati_.P; }
  const Matrix& gain() const noexcept { return riccati_.gain; }
  const Matrix& noise_factor() const noexcept { return noise_factor_; }

 private:
  static void check_psd(const Matrix& m, const char* name) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument(std::string(name) + " must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw std::invalid_argument(std::string(name) + " must be positive semi-definite");
    }
  }

  Matrix A_, B_, sigma_, Q_, R_;
  RiccatiSolution riccati_;
  Matrix noise_factor_;
};

// True plant state and the inputs applied so far (u[0], u[1], ...).
struct PlantState {
  Vector x;
  std::vector<Vector> inputs;
  long k = 0;
};

// x' = A x + B u + w; the applied input is appended to the history.
inline PlantState plant_step(const PlantModel& model, PlantState state, const Vector& u, const Vector& w) {
  if (state.x.size() != model.states() || w.size() != model.states() || u.size() != model.inputs()) {
    throw std::invalid_argument("plant_step: dimension mismatch");
  }
  state.x = model.A() * state.x + model.B() * u + w;
  state.inputs.push_back(u);
  ++state.k;
  return state;
}

// Conditional-mean estimate of x[k] from x[k - age] and the inputs
// u[k - age], ..., u[k - 1], which must be the last `age` entries of `inputs`.
// Evaluated in Horner form: z <- A z + B u, once per elapsed period.
inline Vector estimate(const PlantModel& model, const Vector& payload, long age, std::span<const Vector> inputs) {
  if (age < 1) throw std::invalid_argument("estimate: age must be >= 1");
  if (static_cast<std::size_t>(age) > inputs.size()) throw std::out_of_range("estimate: insufficient input history");
  Vector z = payload;
  for (std::size_t j = inputs.size() - static_cast<std::size_t>(age); j < inputs.size(); ++j) {
    z = model.A() * z + model.B() * inputs[j];
  }
  return z;
}

inline Vector control_input(const PlantModel& model, const Vector& x_hat) { return -model.gain() * x_hat; }

inline double estimation_error(const Vector& x, const Vector& x_hat) { return (x - x_hat).squaredNorm(); }

// Running sum of x'Qx + u'Ru over sampling periods.
struct LqgCost {
  double sum = 0.0;
  long periods = 0;

  void add(const Vector& x, const Vector& u, const Matrix& Q, const Matrix& R) {
    sum += x.dot(Q * x) + u.dot(R * u);
    ++periods;
  }
  double value() const noexcept { return periods > 0 ? sum / static_cast<double>(periods) : 0.0; }
};

}  // namespace aoisched
