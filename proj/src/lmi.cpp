#include "ringctl/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ringctl {

namespace {

int sym_index(const MatrixVar& v, int a, int b) {
  if (a > b) std::swap(a, b);
  return v.offset + b * (b + 1) / 2 + a;
}

int full_index(const MatrixVar& v, int a, int b) { return v.offset + b * v.rows + a; }

}  // namespace

void BlockExpr::add_sym(int r0, int c0, double coeff, const Factor& L,
                        const MatrixVar& V, bool transpose_V, const Factor& R) {
  const int opv_rows = transpose_V && !V.symmetric ? V.cols : V.rows;
  const int opv_cols = transpose_V && !V.symmetric ? V.rows : V.cols;
  const int out_rows = L.ident ? opv_rows : static_cast<int>(L.M.rows());
  const int out_cols = R.ident ? opv_cols : static_cast<int>(R.M.cols());
  if (!L.ident && L.M.cols() != opv_rows)
    throw std::invalid_argument("BlockExpr::add_sym: left factor dimension");
  if (!R.ident && R.M.rows() != opv_cols)
    throw std::invalid_argument("BlockExpr::add_sym: right factor dimension");
  if (r0 + out_rows > size_ || c0 + out_cols > size_)
    throw std::invalid_argument("BlockExpr::add_sym: cell out of range");
  if (!L.ident && !R.ident)
    throw std::logic_error("BlockExpr::add_sym: one factor must be the identity");

  // Iterate the scalar variables of V; each contributes basis matrices
  // e_i e_j^T of op(V).
  auto emit = [&](int var, int i, int j) {
    sdp::RankTerm term;
    term.scale = 1.0;
    if (L.ident) {
      term.p = r0 + i;
      if (R.ident) {
        term.w.add(c0 + j, coeff);
      } else {
        for (int c = 0; c < out_cols; ++c) {
          const double v = R.M(j, c);
          if (v != 0.0) term.w.add(c0 + c, coeff * v);
        }
      }
    } else {
      term.p = c0 + j;
      for (int r = 0; r < out_rows; ++r) {
        const double v = L.M(r, i);
        if (v != 0.0) term.w.add(r0 + r, coeff * v);
      }
    }
    if (!term.w.idx.empty()) terms_[var].push_back(std::move(term));
  };

  if (V.symmetric) {
    for (int b = 0; b < V.rows; ++b)
      for (int a = 0; a <= b; ++a) {
        const int var = sym_index(V, a, b);
        emit(var, a, b);
        if (a != b) emit(var, b, a);
      }
  } else {
    for (int b = 0; b < V.cols; ++b)
      for (int a = 0; a < V.rows; ++a) {
        const int var = full_index(V, a, b);
        if (transpose_V)
          emit(var, b, a);
        else
          emit(var, a, b);
      }
  }
}

void BlockExpr::add_const(int r0, int c0, const Eigen::MatrixXd& M) {
  if (r0 == c0) {
    if ((M - M.transpose()).norm() > 1e-12 * (1.0 + M.norm()))
      throw std::invalid_argument("BlockExpr::add_const: diagonal cell needs symmetric M");
    C_.block(r0, c0, M.rows(), M.cols()) += M;
  } else {
    C_.block(r0, c0, M.rows(), M.cols()) += M;
    C_.block(c0, r0, M.cols(), M.rows()) += M.transpose();
  }
}

Eigen::MatrixXd BlockExpr::assemble(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd M = C_;
  for (const auto& [var, terms] : terms_) {
    const double v = y(var);
    if (v == 0.0) continue;
    for (const sdp::RankTerm& t : terms) {
      for (size_t q = 0; q < t.w.idx.size(); ++q) {
        const double val = v * t.scale * t.w.val[q];
        M(t.p, t.w.idx[q]) += val;
        M(t.w.idx[q], t.p) += val;
      }
    }
  }
  return M;
}

MatrixVar LmiProblem::add_sym_var(int dim) {
  MatrixVar v{num_vars_, dim, dim, true};
  num_vars_ += v.count();
  return v;
}

MatrixVar LmiProblem::add_var(int rows, int cols) {
  MatrixVar v{num_vars_, rows, cols, false};
  num_vars_ += v.count();
  return v;
}

BlockExpr& LmiProblem::add_block(int size, BlockSense sense, double shift) {
  blocks_.emplace_back(new BlockExpr(size, sense, shift));
  return *blocks_.back();
}

void LmiProblem::objective_add_trace(const Eigen::MatrixXd& W, const MatrixVar& V) {
  if (objective_.size() < num_vars_) {
    Eigen::VectorXd grown = Eigen::VectorXd::Zero(num_vars_);
    grown.head(objective_.size()) = objective_;
    objective_ = grown;
  }
  if (W.rows() != V.cols || W.cols() != V.rows)
    throw std::invalid_argument("objective_add_trace: dimension mismatch");
  if (V.symmetric) {
    for (int b = 0; b < V.rows; ++b)
      for (int a = 0; a <= b; ++a)
        objective_(sym_index(V, a, b)) += (a == b) ? W(a, a) : W(a, b) + W(b, a);
  } else {
    for (int b = 0; b < V.cols; ++b)
      for (int a = 0; a < V.rows; ++a) objective_(full_index(V, a, b)) += W(b, a);
  }
}

sdp::Problem LmiProblem::build() const {
  sdp::Problem prob;
  prob.num_vars = num_vars_;
  if (objective_.size() > 0) {
    prob.b = Eigen::VectorXd::Zero(num_vars_);
    prob.b.head(objective_.size()) = objective_;
  }
  for (const auto& blk : blocks_) {
    sdp::DenseBlock db;
    db.size = blk->size_;
    const double sign = blk->sense_ == BlockSense::NegDef ? -1.0 : 1.0;
    db.C = sign * blk->C_;
    db.C.diagonal().array() -= blk->shift_;
    std::vector<int> vars;
    vars.reserve(blk->terms_.size());
    for (const auto& [var, terms] : blk->terms_) vars.push_back(var);
    std::sort(vars.begin(), vars.end());
    for (int var : vars) {
      const int slot = db.add_var(var);
      auto& out = db.terms[slot];
      out = blk->terms_.at(var);
      if (sign < 0)
        for (auto& t : out)
          for (auto& v : t.w.val) v = -v;
    }
    prob.dense_blocks.push_back(std::move(db));
  }
  return prob;
}

Eigen::MatrixXd LmiProblem::value(const MatrixVar& V, const Eigen::VectorXd& y) const {
  Eigen::MatrixXd M(V.rows, V.cols);
  if (V.symmetric) {
    for (int b = 0; b < V.rows; ++b)
      for (int a = 0; a <= b; ++a) M(a, b) = M(b, a) = y(sym_index(V, a, b));
  } else {
    for (int b = 0; b < V.cols; ++b)
      for (int a = 0; a < V.rows; ++a) M(a, b) = y(full_index(V, a, b));
  }
  return M;
}

bool LmiProblem::verify(const Eigen::VectorXd& y, double slack) const {
  for (const auto& blk : blocks_) {
    const Eigen::MatrixXd M = blk->assemble(y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (blk->sense_ == BlockSense::NegDef) {
      if (es.eigenvalues().maxCoeff() > -blk->shift_ + slack) return false;
    } else {
      if (es.eigenvalues().minCoeff() < blk->shift_ - slack) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct LkVars {
  MatrixVar P, U, P2, P3;
};

// Shared assembly of the two sample-data stability blocks.
LkVars build_lk_blocks(LmiProblem& lp, const Eigen::MatrixXd& A_red,
                       const Eigen::MatrixXd& A1_red, double delta, double margin) {
  const int d = static_cast<int>(A_red.rows());
  LkVars v;
  v.P = lp.add_sym_var(d);
  v.U = lp.add_sym_var(d);
  v.P2 = lp.add_var(d, d);
  v.P3 = lp.add_var(d, d);
  const Eigen::MatrixXd M = A_red + A1_red;
  const Factor FM = Factor::dense(M);
  const Factor FMt = Factor::dense(M.transpose());
  const Factor FA1 = Factor::dense(A1_red);
  const Factor I = Factor::I();

  BlockExpr& b1 = lp.add_block(2 * d, BlockSense::NegDef, margin);
  b1.add_sym(0, 0, 1.0, I, v.P2, true, FM);
  b1.add_sym(0, d, 1.0, I, v.P, false, I);
  b1.add_sym(0, d, -1.0, I, v.P2, true, I);
  b1.add_sym(0, d, 1.0, FMt, v.P3, false, I);
  b1.add_sym(d, d, -1.0, I, v.P3, false, I);
  b1.add_sym(d, d, 0.5 * delta, I, v.U, false, I);

  BlockExpr& b2 = lp.add_block(3 * d, BlockSense::NegDef, margin);
  b2.add_sym(0, 0, 1.0, I, v.P2, true, FM);
  b2.add_sym(0, d, 1.0, I, v.P, false, I);
  b2.add_sym(0, d, -1.0, I, v.P2, true, I);
  b2.add_sym(0, d, 1.0, FMt, v.P3, false, I);
  b2.add_sym(d, d, -1.0, I, v.P3, false, I);
  b2.add_sym(0, 2 * d, -delta, I, v.P2, true, FA1);
  b2.add_sym(d, 2 * d, -delta, I, v.P3, true, FA1);
  b2.add_sym(2 * d, 2 * d, -0.5 * delta, I, v.U, false, I);

  BlockExpr& bp = lp.add_block(d, BlockSense::PosDef, margin);
  bp.add_sym(0, 0, 0.5, I, v.P, false, I);
  BlockExpr& bu = lp.add_block(d, BlockSense::PosDef, margin);
  bu.add_sym(0, 0, 0.5, I, v.U, false, I);
  return v;
}

void check_reduced_pair(const Eigen::MatrixXd& A_red, const Eigen::MatrixXd& A1_red) {
  if (A_red.rows() != A_red.cols() || A1_red.rows() != A1_red.cols() ||
      A_red.rows() != A1_red.rows())
    throw std::invalid_argument("lk: reduced matrices must be square and matching");
}

}  // namespace

LkCertificate lk_feasible(const Eigen::MatrixXd& A_red, const Eigen::MatrixXd& A1_red,
                          double delta, const LmiOptions& opt) {
  check_reduced_pair(A_red, A1_red);
  if (!(delta > 0.0)) throw std::invalid_argument("lk_feasible: delta must be > 0");

  // The blocks are jointly homogeneous in (P, U, P2, P3), so the verdict is
  // identical for every positive strictness margin; solving at unit shift
  // keeps the phase-I optimum well scaled. Any returned assignment satisfies
  // the configured margin a fortiori.
  const double shift = std::max(1.0, opt.margin);
  LmiProblem lp;
  const LkVars vars = build_lk_blocks(lp, A_red, A1_red, delta, shift);
  sdp::Options sopt = opt.sdp;
  sopt.feasibility_mode = true;
  const sdp::Result res = sdp::solve(lp.build(), sopt);

  LkCertificate cert;
  cert.delta = delta;
  cert.solver_status = res.status;
  cert.note = res.note;
  if (res.status == sdp::SolveStatus::Feasible) {
    if (lp.verify(res.y, opt.verify_slack)) {
      cert.feasible = true;
      cert.P = lp.value(vars.P, res.y);
      cert.U = lp.value(vars.U, res.y);
      cert.P2 = lp.value(vars.P2, res.y);
      cert.P3 = lp.value(vars.P3, res.y);
    } else {
      cert.solver_status = sdp::SolveStatus::NumericalFailure;
      cert.note = "verification eigencheck rejected the assignment";
    }
  }
  return cert;
}

LkHoldLimit lk_hold_limit(const Eigen::MatrixXd& A_red, const Eigen::MatrixXd& A1_red,
                          double range_lo, double range_hi, double granularity,
                          const LmiOptions& opt) {
  check_reduced_pair(A_red, A1_red);
  if (!(granularity > 0.0) || !(range_hi > range_lo))
    throw std::invalid_argument("lk_hold_limit: bad search range");

  LkHoldLimit out;
  auto probe = [&](long idx) {
    const double delta = idx * granularity;
    const LkCertificate c = lk_feasible(A_red, A1_red, delta, opt);
    ProbeLog log;
    log.delta = delta;
    log.feasible = c.feasible;
    log.numerical_failure = c.solver_status == sdp::SolveStatus::NumericalFailure;
    if (log.numerical_failure) ++out.numerical_failures;
    out.probes.push_back(log);
    return c.feasible;
  };

  const long lo_grid = std::max<long>(1, std::lround(std::ceil(range_lo / granularity)));
  const long hi_grid = std::lround(std::floor(range_hi / granularity));

  if (!probe(lo_grid)) {
    out.delta = 0.0;
    out.feasible_at_floor = false;
    return out;
  }
  out.feasible_at_floor = true;

  if (probe(hi_grid)) {
    out.delta = hi_grid * granularity;
  } else {
    long lo = lo_grid, hi = hi_grid;  // lo feasible, hi infeasible
    while (hi - lo > 1) {
      const long mid = lo + (hi - lo) / 2;
      if (probe(mid))
        lo = mid;
      else
        hi = mid;
    }
    out.delta = lo * granularity;
  }

  if (out.numerical_failures * 10 > static_cast<int>(out.probes.size()))
    throw std::runtime_error("lk_hold_limit: too many solver failures during search");
  return out;
}

HinfCertificate lk_hinf_feasible(const Eigen::MatrixXd& A_red,
                                 const Eigen::MatrixXd& A1_red,
                                 const Eigen::MatrixXd& Bd_red, double delta,
                                 double gamma, const LmiOptions& opt) {
  check_reduced_pair(A_red, A1_red);
  if (Bd_red.rows() != A_red.rows())
    throw std::invalid_argument("lk_hinf_feasible: disturbance input dimension");
  if (!(delta > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("lk_hinf_feasible: delta, gamma must be > 0");

  const int d = static_cast<int>(A_red.rows());
  const int nd = static_cast<int>(Bd_red.cols());
  const Eigen::MatrixXd M = A_red + A1_red;
  const Factor FM = Factor::dense(M);
  const Factor FMt = Factor::dense(M.transpose());
  const Factor FA1 = Factor::dense(A1_red);
  const Factor FBd = Factor::dense(Bd_red);
  const Factor I = Factor::I();
  const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd g2I = gamma * gamma * Eigen::MatrixXd::Identity(nd, nd);

  LmiProblem lp;
  MatrixVar P = lp.add_sym_var(d);
  MatrixVar U = lp.add_sym_var(d);
  MatrixVar P2 = lp.add_var(d, d);
  MatrixVar P3 = lp.add_var(d, d);

  BlockExpr& b1 = lp.add_block(2 * d + nd, BlockSense::NegDef, opt.margin);
  b1.add_sym(0, 0, 1.0, I, P2, true, FM);
  b1.add_const(0, 0, Id);
  b1.add_sym(0, d, 1.0, I, P, false, I);
  b1.add_sym(0, d, -1.0, I, P2, true, I);
  b1.add_sym(0, d, 1.0, FMt, P3, false, I);
  b1.add_sym(d, d, -1.0, I, P3, false, I);
  b1.add_sym(d, d, 0.5 * delta, I, U, false, I);
  b1.add_sym(0, 2 * d, 1.0, I, P2, true, FBd);
  b1.add_sym(d, 2 * d, 1.0, I, P3, true, FBd);
  b1.add_const(2 * d, 2 * d, -g2I);

  BlockExpr& b2 = lp.add_block(3 * d + nd, BlockSense::NegDef, opt.margin);
  b2.add_sym(0, 0, 1.0, I, P2, true, FM);
  b2.add_const(0, 0, Id);
  b2.add_sym(0, d, 1.0, I, P, false, I);
  b2.add_sym(0, d, -1.0, I, P2, true, I);
  b2.add_sym(0, d, 1.0, FMt, P3, false, I);
  b2.add_sym(d, d, -1.0, I, P3, false, I);
  b2.add_sym(0, 2 * d, -delta, I, P2, true, FA1);
  b2.add_sym(d, 2 * d, -delta, I, P3, true, FA1);
  b2.add_sym(2 * d, 2 * d, -0.5 * delta, I, U, false, I);
  b2.add_sym(0, 3 * d, 1.0, I, P2, true, FBd);
  b2.add_sym(d, 3 * d, 1.0, I, P3, true, FBd);
  b2.add_const(3 * d, 3 * d, -g2I);

  BlockExpr& bp = lp.add_block(d, BlockSense::PosDef, opt.margin);
  bp.add_sym(0, 0, 0.5, I, P, false, I);
  BlockExpr& bu = lp.add_block(d, BlockSense::PosDef, opt.margin);
  bu.add_sym(0, 0, 0.5, I, U, false, I);

  sdp::Options sopt = opt.sdp;
  sopt.feasibility_mode = true;
  const sdp::Result res = sdp::solve(lp.build(), sopt);

  HinfCertificate cert;
  cert.delta = delta;
  cert.gamma = gamma;
  cert.solver_status = res.status;
  if (res.status == sdp::SolveStatus::Feasible && lp.verify(res.y, opt.verify_slack)) {
    cert.feasible = true;
    cert.P = lp.value(P, res.y);
    cert.U = lp.value(U, res.y);
    cert.P2 = lp.value(P2, res.y);
    cert.P3 = lp.value(P3, res.y);
  }
  return cert;
}

LkSynthesisResult lk_synthesize(const Eigen::MatrixXd& A_red,
                                const Eigen::MatrixXd& B_red, double delta_in,
                                double epsilon, const LmiOptions& opt) {
  if (A_red.rows() != A_red.cols() || B_red.rows() != A_red.rows() || B_red.cols() != 1)
    throw std::invalid_argument("lk_synthesize: dimension mismatch");
  if (!(delta_in > 0.0)) throw std::invalid_argument("lk_synthesize: delta_in must be > 0");

  const int d = static_cast<int>(A_red.rows());
  const Factor FA = Factor::dense(A_red);
  const Factor FAt = Factor::dense(A_red.transpose());
  const Factor FB = Factor::dense(B_red);
  const Factor FBt = Factor::dense(B_red.transpose());
  const Factor I = Factor::I();
  const double shift = std::max(1.0, opt.margin);

  LmiProblem lp;
  MatrixVar Pb = lp.add_sym_var(d);
  MatrixVar Ub = lp.add_sym_var(d);
  MatrixVar Qv = lp.add_var(d, d);
  MatrixVar Lv = lp.add_var(1, d);

  // Written-once half of the diagonal cell: A Q + B L (mirror completes it).
  auto phi11 = [&](BlockExpr& b) {
    b.add_sym(0, 0, 1.0, FA, Qv, false, I);
    b.add_sym(0, 0, 1.0, FB, Lv, false, I);
  };
  // (0,1) cell: P_bar - Q + eps (Q^T A^T + L^T B^T). The congruence with the
  // analysis blocks forces eps on both transported terms.
  auto cell01 = [&](BlockExpr& b) {
    b.add_sym(0, d, 1.0, I, Pb, false, I);
    b.add_sym(0, d, -1.0, I, Qv, false, I);
    b.add_sym(0, d, epsilon, I, Qv, true, FAt);
    b.add_sym(0, d, epsilon, I, Lv, true, FBt);
  };

  BlockExpr& b1 = lp.add_block(2 * d, BlockSense::NegDef, shift);
  phi11(b1);
  cell01(b1);
  b1.add_sym(d, d, -epsilon, I, Qv, false, I);
  b1.add_sym(d, d, 0.5 * delta_in, I, Ub, false, I);

  BlockExpr& b2 = lp.add_block(3 * d, BlockSense::NegDef, shift);
  phi11(b2);
  cell01(b2);
  b2.add_sym(d, d, -epsilon, I, Qv, false, I);
  b2.add_sym(0, 2 * d, -delta_in, FB, Lv, false, I);
  b2.add_sym(d, 2 * d, -delta_in * epsilon, FB, Lv, false, I);
  b2.add_sym(2 * d, 2 * d, -0.5 * delta_in, I, Ub, false, I);

  BlockExpr& bp = lp.add_block(d, BlockSense::PosDef, shift);
  bp.add_sym(0, 0, 0.5, I, Pb, false, I);
  BlockExpr& bu = lp.add_block(d, BlockSense::PosDef, shift);
  bu.add_sym(0, 0, 0.5, I, Ub, false, I);

  sdp::Options sopt = opt.sdp;
  sopt.feasibility_mode = true;
  const sdp::Result res = sdp::solve(lp.build(), sopt);

  LkSynthesisResult out;
  out.epsilon = epsilon;
  out.delta_in = delta_in;
  out.solver_status = res.status;
  out.note = res.note;
  if (res.status != sdp::SolveStatus::Feasible) return out;
  if (!lp.verify(res.y, opt.verify_slack)) {
    out.solver_status = sdp::SolveStatus::NumericalFailure;
    out.note = "verification eigencheck rejected the assignment";
    return out;
  }

  out.P_bar = lp.value(Pb, res.y);
  out.U_bar = lp.value(Ub, res.y);
  out.Q_syn = lp.value(Qv, res.y);
  out.L_syn = lp.value(Lv, res.y).row(0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.Q_syn);
  out.cond_Q = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
  if (!(out.cond_Q < 1e12)) {
    out.note = "Q ill-conditioned";
    return out;
  }

  // K = L Q^{-1} in the corollary's A1 = +B K convention; stored negated so
  // that A1 = -B K_stored everywhere else.
  const Eigen::RowVectorXd K_raw =
      out.Q_syn.transpose().partialPivLu().solve(out.L_syn.transpose()).transpose();
  out.K_red = -K_raw;
  out.K.K = (d % 2 == 1) ? lift_gain(out.K_red, (d + 1) / 2) : out.K_red;
  out.K.k_mult = 1.0;
  out.K.provenance = ControllerProvenance::LkSynthesized;

  // Cross-check with the analysis LMIs at delta_in.
  const Eigen::MatrixXd A1_cross = -B_red * out.K_red;
  const LkCertificate cross = lk_feasible(A_red, A1_cross, delta_in, opt);
  if (!cross.feasible) {
    out.note = "analysis cross-check failed at delta_in";
    return out;
  }

  // Congruence between the synthesis blocks and the analysis blocks at the
  // mapped variables (P2 = Q^{-1}, P3 = eps Q^{-1}, P = Q^{-T} P_bar Q^{-1}).
  {
    const Eigen::MatrixXd Qinv = out.Q_syn.partialPivLu().solve(
        Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd P_map = Qinv.transpose() * out.P_bar * Qinv;
    const Eigen::MatrixXd U_map = Qinv.transpose() * out.U_bar * Qinv;
    LmiProblem analysis;
    const LkVars avars =
        build_lk_blocks(analysis, A_red, A1_cross, delta_in, shift);
    Eigen::VectorXd y_map = Eigen::VectorXd::Zero(analysis.num_vars());
    auto pack_sym = [&](const MatrixVar& v, const Eigen::MatrixXd& M) {
      for (int bcol = 0; bcol < v.rows; ++bcol)
        for (int a = 0; a <= bcol; ++a)
          y_map(v.offset + bcol * (bcol + 1) / 2 + a) = 0.5 * (M(a, bcol) + M(bcol, a));
    };
    auto pack_full = [&](const MatrixVar& v, const Eigen::MatrixXd& M) {
      for (int bcol = 0; bcol < v.cols; ++bcol)
        for (int a = 0; a < v.rows; ++a) y_map(v.offset + bcol * v.rows + a) = M(a, bcol);
    };
    pack_sym(avars.P, P_map);
    pack_sym(avars.U, U_map);
    pack_full(avars.P2, Qinv);
    pack_full(avars.P3, epsilon * Qinv);

    double worst = 0.0;
    for (int blk = 0; blk < 2; ++blk) {
      const int cells = blk == 0 ? 2 : 3;
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(cells * d, cells * d);
      for (int c = 0; c < cells; ++c) T.block(c * d, c * d, d, d) = Qinv;
      const Eigen::MatrixXd syn =
          (blk == 0 ? b1 : b2).assemble(res.y);
      const Eigen::MatrixXd ana = analysis.blocks()[blk]->assemble(y_map);
      const Eigen::MatrixXd transported = T.transpose() * syn * T;
      worst = std::max(worst, (transported - ana).norm() / (1.0 + ana.norm()));
    }
    out.duality_residual = worst;
  }

  out.feasible = true;
  return out;
}

}  // namespace ringctl
