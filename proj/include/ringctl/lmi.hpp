#ifndef RINGCTL_LMI_HPP
#define RINGCTL_LMI_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ringctl/sdp.hpp"
#include "ringctl/system.hpp"

namespace ringctl {

// ---------------------------------------------------------------------------
// Affine LMI modeling layer: named matrix variables, symmetric blocks built
// from terms  coeff * L * op(V) * R  (placed at a cell and mirrored), and a
// reassembly path used to re-verify every solver verdict independently.
// ---------------------------------------------------------------------------

struct MatrixVar {
  int offset = 0;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;

  int count() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
};

// Left/right factor in a product term: identity or an explicit matrix.
struct Factor {
  bool ident = true;
  Eigen::MatrixXd M;

  static Factor I() { return Factor{}; }
  static Factor dense(const Eigen::MatrixXd& m) { return Factor{false, m}; }
};

enum class BlockSense { NegDef, PosDef };

class LmiProblem;

class BlockExpr {
 public:
  // Adds coeff * L * op(V) * R at (r0, c0) plus the mirrored transpose at
  // (c0, r0). A term written once in the LMI (with "*" marking the mirror)
  // maps to exactly one call; a symmetric diagonal-cell term S maps to a call
  // with coeff/2 since the mirror doubles it.
  void add_sym(int r0, int c0, double coeff, const Factor& L, const MatrixVar& V,
               bool transpose_V, const Factor& R);

  // Adds M at (r0, c0) and M^T at (c0, r0); for r0 == c0, M must be symmetric
  // and is added once.
  void add_const(int r0, int c0, const Eigen::MatrixXd& M);

  // Raw block content at the assignment y (independent of solver internals).
  Eigen::MatrixXd assemble(const Eigen::VectorXd& y) const;

  int size() const { return size_; }
  BlockSense sense() const { return sense_; }
  double shift() const { return shift_; }

 private:
  friend class LmiProblem;
  BlockExpr(int size, BlockSense sense, double shift)
      : size_(size), sense_(sense), shift_(shift), C_(Eigen::MatrixXd::Zero(size, size)) {}

  int size_;
  BlockSense sense_;
  double shift_;  // NegDef: content <= -shift I; PosDef: content >= +shift I
  Eigen::MatrixXd C_;
  std::unordered_map<int, std::vector<sdp::RankTerm>> terms_;  // by variable
};

class LmiProblem {
 public:
  MatrixVar add_sym_var(int dim);
  MatrixVar add_var(int rows, int cols);

  BlockExpr& add_block(int size, BlockSense sense, double shift);

  // Linear objective += trace(W * V).
  void objective_add_trace(const Eigen::MatrixXd& W, const MatrixVar& V);

  sdp::Problem build() const;
  int num_vars() const { return num_vars_; }

  Eigen::MatrixXd value(const MatrixVar& V, const Eigen::VectorXd& y) const;

  // Eigenvalue re-verification of every block at y: NegDef blocks must have
  // max eig <= -shift + slack, PosDef blocks min eig >= shift - slack.
  bool verify(const Eigen::VectorXd& y, double slack = 1e-9) const;

  const std::vector<std::unique_ptr<BlockExpr>>& blocks() const { return blocks_; }

 private:
  int num_vars_ = 0;
  Eigen::VectorXd objective_;
  std::vector<std::unique_ptr<BlockExpr>> blocks_;
};

// ---------------------------------------------------------------------------
// Sample-data certification built on the oracle.
// ---------------------------------------------------------------------------

struct LmiOptions {
  double margin = 1e-7;        // strictness margin for "< 0" constraints
  double verify_slack = 1e-9;  // tolerance of the independent eigencheck
  sdp::Options sdp;
};

struct LkCertificate {
  Eigen::MatrixXd P, U, P2, P3;
  double delta = 0.0;
  bool feasible = false;
  sdp::SolveStatus solver_status = sdp::SolveStatus::NumericalFailure;
  std::string note;
};

// Feasibility of the sample-data stability LMIs at hold length delta, on the
// reduced system (the full system's structural zero mode makes strict LMIs
// infeasible). Every feasible verdict is re-verified by eigenvalue check.
LkCertificate lk_feasible(const Eigen::MatrixXd& A_red, const Eigen::MatrixXd& A1_red,
                          double delta, const LmiOptions& opt = {});

struct ProbeLog {
  double delta = 0.0;
  bool feasible = false;
  bool numerical_failure = false;
};

struct LkHoldLimit {
  double delta = 0.0;                // largest certified grid point, 0 if none
  bool feasible_at_floor = false;
  int numerical_failures = 0;
  std::vector<ProbeLog> probes;
};

// Largest grid delta (granularity steps) with feasible LMIs, by binary search
// over [range_lo, range_hi]. NumericalFailure probes count as infeasible but
// are logged; more than 10% of them aborts with an exception.
LkHoldLimit lk_hold_limit(const Eigen::MatrixXd& A_red, const Eigen::MatrixXd& A1_red,
                          double range_lo = 0.0, double range_hi = 10.0,
                          double granularity = 0.01, const LmiOptions& opt = {});

struct HinfCertificate {
  double gamma = 0.0;
  double delta = 0.0;
  bool feasible = false;
  Eigen::MatrixXd P, U, P2, P3;
  sdp::SolveStatus solver_status = sdp::SolveStatus::NumericalFailure;
};

// Disturbance-attenuation variant: certifies the integral gain from the
// actuation error d to the state is at most gamma, at hold length delta.
HinfCertificate lk_hinf_feasible(const Eigen::MatrixXd& A_red,
                                 const Eigen::MatrixXd& A1_red,
                                 const Eigen::MatrixXd& Bd_red, double delta,
                                 double gamma, const LmiOptions& opt = {});

struct LkSynthesisResult {
  Eigen::MatrixXd P_bar, U_bar, Q_syn;
  Eigen::RowVectorXd L_syn;
  double epsilon = 1.0;
  double delta_in = 0.0;
  Eigen::RowVectorXd K_red;  // reduced gain, A1 = -B K convention
  Controller K;  // lifted to the full ring state for odd input dimension,
                 // otherwise equal to K_red
  bool feasible = false;
  double cond_Q = 0.0;
  double duality_residual = 0.0;  // congruence mismatch vs the analysis blocks
  sdp::SolveStatus solver_status = sdp::SolveStatus::NumericalFailure;
  std::string note;
};

// Controller synthesis at a target hold length delta_in; K = L Q^{-1} mapped
// into the A1 = -B K storage convention and lifted to the full state. The
// result is cross-checked with lk_feasible at delta_in.
LkSynthesisResult lk_synthesize(const Eigen::MatrixXd& A_red,
                                const Eigen::MatrixXd& B_red, double delta_in,
                                double epsilon = 1.0, const LmiOptions& opt = {});

}  // namespace ringctl

#endif  // RINGCTL_LMI_HPP
