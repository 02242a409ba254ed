#include "ringctl/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <sstream>

namespace ringctl {

double max_singular_value(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

bool is_hurwitz(const Eigen::MatrixXd& A, double tol) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff() < -tol;
}

namespace {

void require_hurwitz(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const auto eigs = es.eigenvalues();
  double max_re = eigs.real().maxCoeff();
  if (max_re >= -1e-9) {
    std::vector<std::complex<double>> offending;
    for (int i = 0; i < eigs.size(); ++i)
      if (eigs(i).real() >= -1e-9) offending.push_back(eigs(i));
    std::ostringstream msg;
    msg << "matrix is not Hurwitz (max Re = " << max_re << ", " << offending.size()
        << " offending eigenvalue(s))";
    throw NotHurwitzError(msg.str(), std::move(offending));
  }
}

// Bartels-Stewart on the complex Schur form: transform A = U T U^*, solve
// T Y + Y T^* = -F column by column, transform back.
Eigen::MatrixXd solve_lyapunov_schur(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A, true);
  if (schur.info() != Eigen::Success)
    throw SingularSystemError("Schur decomposition failed");
  const Eigen::MatrixXcd T = schur.matrixT();
  const Eigen::MatrixXcd U = schur.matrixU();

  const Eigen::MatrixXcd F = U.adjoint() * Q.cast<std::complex<double>>() * U;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::MatrixXcd Tadj = T.adjoint();

  // Column k of T Y + Y T^* = -F once columns k+1..n-1 are known:
  // (T + conj(T_kk) I) y_k = -F_k - Y_partial * Tadj_k.
  for (int k = n - 1; k >= 0; --k) {
    Eigen::VectorXcd rhs = -F.col(k);
    for (int j = k + 1; j < n; ++j) rhs -= Y.col(j) * Tadj(j, k);
    Eigen::MatrixXcd Tk = T;
    Tk.diagonal().array() += Tadj(k, k);
    // Upper-triangular back substitution.
    Eigen::VectorXcd y(n);
    for (int i = n - 1; i >= 0; --i) {
      std::complex<double> acc = rhs(i);
      for (int j = i + 1; j < n; ++j) acc -= Tk(i, j) * y(j);
      if (std::abs(Tk(i, i)) < 1e-300)
        throw SingularSystemError("Lyapunov operator numerically singular");
      y(i) = acc / Tk(i, i);
    }
    Y.col(k) = y;
  }

  Eigen::MatrixXd P = (U * Y * U.adjoint()).real();
  return 0.5 * (P + P.transpose());
}

Eigen::MatrixXd solve_lyapunov_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  const int m = n * n;
  // (I (x) A + A (x) I) vec(P) = -vec(Q), with vec stacking columns:
  // vec(AP) = (I (x) A) vec(P), vec(P A^T) = (A (x) I) vec(P).
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < n; ++j) op.block(j * n, j * n, n, n) += A;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) op(j * n + k, i * n + k) += A(j, i);
  Eigen::VectorXd q(m);
  for (int j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!lu.isInvertible())
    throw SingularSystemError("Kronecker Lyapunov operator numerically singular");
  Eigen::VectorXd p = lu.solve(q);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
  return 0.5 * (P + P.transpose());
}

}  // namespace

Eigen::MatrixXd solve_continuous_lyapunov(const Eigen::MatrixXd& A_cl,
                                          const Eigen::MatrixXd& Q,
                                          LyapunovMethod method) {
  if (A_cl.rows() != A_cl.cols() || Q.rows() != Q.cols() || A_cl.rows() != Q.rows())
    throw std::invalid_argument("solve_continuous_lyapunov: dimension mismatch");
  require_hurwitz(A_cl);
  Eigen::MatrixXd P = (method == LyapunovMethod::Schur) ? solve_lyapunov_schur(A_cl, Q)
                                                        : solve_lyapunov_kron(A_cl, Q);
  const double residual = (A_cl * P + P * A_cl.transpose() + Q).norm();
  if (residual > 1e-8 * Q.norm())
    throw SingularSystemError("Lyapunov solve residual above tolerance");
  return P;
}

LyapunovCertificate lyapunov_hold_bound(const SystemMatrices& sys, const Controller& c,
                                        const Eigen::MatrixXd* Q_opt, double c_prime,
                                        double d_margin) {
  const ReducedSystem red = reduce(sys, c);
  const int dim = red.dim();
  LyapunovCertificate cert;
  cert.c_prime = c_prime;
  cert.d_margin = d_margin;
  cert.Q = Q_opt ? *Q_opt : Eigen::MatrixXd::Identity(dim, dim);
  if (cert.Q.rows() != dim || cert.Q.cols() != dim)
    throw std::invalid_argument("lyapunov_hold_bound: Q dimension mismatch");

  const Eigen::MatrixXd A_cl = red.A_red + red.A1_red;
  cert.P = solve_continuous_lyapunov(A_cl, cert.Q);
  cert.residual_fro = (A_cl * cert.P + cert.P * A_cl.transpose() + cert.Q).norm();

  Eigen::JacobiSVD<Eigen::MatrixXd> svdQ(cert.Q);
  cert.sigma_min_Q = svdQ.singularValues().tail(1)(0);
  cert.sigma_max_P = max_singular_value(cert.P);
  cert.sigma_max_A = max_singular_value(red.A_red);
  cert.sigma_max_A1 = max_singular_value(red.A1_red);

  const double denom =
      cert.sigma_max_P * std::pow(cert.sigma_max_A + cert.sigma_max_A1, 2);
  cert.delta_bound = c_prime * cert.sigma_min_Q / denom;
  return cert;
}

namespace {
double disturbance_gain(const LyapunovCertificate& cert, const Eigen::MatrixXd& B_d_red) {
  return max_singular_value(B_d_red * cert.P + cert.P * B_d_red.transpose());
}
}  // namespace

double nonvanishing_ultimate_bound(const LyapunovCertificate& cert,
                                   const Eigen::MatrixXd& B_d_red, double d_nv,
                                   double d_margin) {
  return 10.0 * disturbance_gain(cert, B_d_red) * d_nv /
         ((1.0 / d_margin) * cert.sigma_min_Q);
}

VanishingBound vanishing_hold_bound(const LyapunovCertificate& cert,
                                    const Eigen::MatrixXd& B_d_red, double d_v) {
  VanishingBound out;
  const double numer = cert.sigma_min_Q - 5.0 * disturbance_gain(cert, B_d_red) * d_v;
  const double denom =
      cert.sigma_max_P * std::pow(cert.sigma_max_A + cert.sigma_max_A1, 2);
  if (numer < 0.0) {
    out.delta = 0.0;
    out.disturbance_too_large = true;
  } else {
    out.delta = cert.c_prime * numer / denom;
  }
  return out;
}

double reaction_delay_bound(const LyapunovCertificate& cert, double Sigma,
                            double D_v_bar, double c_dprime) {
  const double delta = cert.delta_bound - c_dprime * D_v_bar * Sigma;
  return delta > 0.0 ? delta : 0.0;
}

}  // namespace ringctl
