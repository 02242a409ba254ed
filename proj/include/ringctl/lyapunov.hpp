#ifndef RINGCTL_LYAPUNOV_HPP
#define RINGCTL_LYAPUNOV_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "ringctl/system.hpp"

namespace ringctl {

// Closed-loop matrix is not Hurwitz; carries the offending eigenvalues.
struct NotHurwitzError : std::runtime_error {
  explicit NotHurwitzError(const std::string& what,
                           std::vector<std::complex<double>> eigs = {})
      : std::runtime_error(what), eigenvalues(std::move(eigs)) {}
  std::vector<std::complex<double>> eigenvalues;
};

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double max_singular_value(const Eigen::MatrixXd& M);

// max Re(lambda) < -1e-9 over the spectrum.
bool is_hurwitz(const Eigen::MatrixXd& A, double tol = 1e-9);

enum class LyapunovMethod { Schur, Kronecker };

// Solve A_cl P + P A_cl^T = -Q for the unique symmetric P > 0 (A_cl Hurwitz).
// The Schur path (Bartels-Stewart) is the default; the Kronecker path solves
// the vectorized linear system directly and is kept as an independent route
// for cross-checks and small systems.
Eigen::MatrixXd solve_continuous_lyapunov(const Eigen::MatrixXd& A_cl,
                                          const Eigen::MatrixXd& Q,
                                          LyapunovMethod method = LyapunovMethod::Schur);

// Everything needed to evaluate and audit the closed-form hold-length bound
//   delta = c' * sigma_min(Q) / (sigma_max(P) (sigma_max(A)+sigma_max(A1))^2)
// on the reduced system.
struct LyapunovCertificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  double sigma_min_Q = 0.0;
  double sigma_max_P = 0.0;
  double sigma_max_A = 0.0;
  double sigma_max_A1 = 0.0;
  double delta_bound = 0.0;
  double c_prime = 1.0;
  double d_margin = 2.0;
  double residual_fro = 0.0;  // ||A_cl P + P A_cl^T + Q||_F
};

LyapunovCertificate lyapunov_hold_bound(const SystemMatrices& sys, const Controller& c,
                                        const Eigen::MatrixXd* Q_opt = nullptr,
                                        double c_prime = 1.0, double d_margin = 2.0);

// Ultimate bound under a nonvanishing actuation error of magnitude d_nv:
//   10 * sigma_max(B_d P + P B_d^T) * d_nv / ((1/d) sigma_min(Q)).
// B_d_red must match the certificate's (reduced) dimension.
double nonvanishing_ultimate_bound(const LyapunovCertificate& cert,
                                   const Eigen::MatrixXd& B_d_red, double d_nv,
                                   double d_margin = 2.0);

struct VanishingBound {
  double delta = 0.0;
  bool disturbance_too_large = false;  // numerator went negative, floored at 0
};

// Hold bound under a vanishing error proportional to ||x||:
//   c' (sigma_min(Q) - 5 sigma_max(B_d P + P B_d^T) d_v) / denominator.
VanishingBound vanishing_hold_bound(const LyapunovCertificate& cert,
                                    const Eigen::MatrixXd& B_d_red, double d_v);

// Hold bound under reaction delay: delta_bound - c'' * D_v_bar * Sigma, >= 0.
double reaction_delay_bound(const LyapunovCertificate& cert, double Sigma,
                            double D_v_bar, double c_dprime = 1.0);

}  // namespace ringctl

#endif  // RINGCTL_LYAPUNOV_HPP
