#ifndef RINGCTL_SDP_HPP
#define RINGCTL_SDP_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ringctl::sdp {

// Sparse vector used inside rank-structured coefficients.
struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;

  void add(int i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
};

// One rank-2 symmetric contribution: scale * (e_p w^T + w e_p^T).
// Coefficient matrices of scalar decision variables in the LMI blocks are
// short sums of these, which keeps the Schur-complement assembly cheap.
struct RankTerm {
  int p = 0;
  double scale = 1.0;
  SparseVec w;
};

// Affine constraint  S_k(y) = C + sum_i y_i A_i  >= 0  (PSD), with A_i given
// per active variable as rank terms plus an optional multiple of the identity.
struct DenseBlock {
  int size = 0;
  Eigen::MatrixXd C;
  std::vector<int> var_index;                 // active decision variables
  std::vector<std::vector<RankTerm>> terms;   // parallel to var_index
  std::vector<double> identity_scale;         // parallel to var_index

  int add_var(int global_index) {
    var_index.push_back(global_index);
    terms.emplace_back();
    identity_scale.push_back(0.0);
    return static_cast<int>(var_index.size()) - 1;
  }
};

// Elementwise nonnegativity block: c + sum_i y_i a_i >= 0 componentwise.
// Used for scalar bounds (e.g. the box |y_i| <= R).
struct DiagBlock {
  int size = 0;
  Eigen::VectorXd C;
  std::vector<int> var_index;
  std::vector<std::vector<std::pair<int, double>>> entries;  // (position, value)
};

struct Problem {
  int num_vars = 0;
  Eigen::VectorXd b;  // objective, minimized; empty means pure feasibility
  std::vector<DenseBlock> dense_blocks;
  std::vector<DiagBlock> diag_blocks;

  int new_var() { return num_vars++; }
  // Two-sided bound |y_i| <= r for every variable, one diag block.
  void add_box(double r);
};

enum class SolveStatus { Optimal, Feasible, Infeasible, NumericalFailure };

struct Result {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd y;
  double objective = 0.0;
  double rel_gap = 0.0;
  double primal_err = 0.0;
  double dual_err = 0.0;
  int iterations = 0;
  std::string note;
};

struct Options {
  int max_iter = 120;
  double eps_gap = 1e-8;
  double eps_feas = 1e-9;
  double step_frac = 0.98;
  // Feasibility mode appends an internal phase-I variable t with S_k + t I >= 0
  // on every dense block and minimizes t; exits early once the incumbent y
  // satisfies every block or once t is provably positive.
  bool feasibility_mode = false;
  bool verbose = false;
};

// Deterministic for identical input (no randomized pivoting, fixed iteration
// rules). Feasible verdicts carry the assignment; callers are expected to
// re-verify by reassembling their blocks.
Result solve(const Problem& problem, const Options& opts = {});

}  // namespace ringctl::sdp

#endif  // RINGCTL_SDP_HPP
