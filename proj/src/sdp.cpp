#include "ringctl/sdp.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ringctl::sdp {

namespace {

constexpr double kBoxRadius = 1e8;

// <A_i, W> for a rank-structured coefficient: sum_q s_q (w'(W col p) + w'(W row p)),
// plus identity_scale * tr(W). W need not be symmetric.
double dot_coeff(const std::vector<RankTerm>& terms, double id_scale,
                 const Eigen::MatrixXd& W) {
  double acc = 0.0;
  for (const RankTerm& t : terms) {
    double col_dot = 0.0, row_dot = 0.0;
    const int nnz = static_cast<int>(t.w.idx.size());
    for (int q = 0; q < nnz; ++q) {
      const int r = t.w.idx[q];
      const double v = t.w.val[q];
      col_dot += v * W(r, t.p);
      row_dot += v * W(t.p, r);
    }
    acc += t.scale * (col_dot + row_dot);
  }
  if (id_scale != 0.0) acc += id_scale * W.trace();
  return acc;
}

// M += v * A_i for a rank-structured coefficient.
void scatter_coeff(const std::vector<RankTerm>& terms, double id_scale, double v,
                   Eigen::MatrixXd& M) {
  for (const RankTerm& t : terms) {
    const double s = v * t.scale;
    const int nnz = static_cast<int>(t.w.idx.size());
    for (int q = 0; q < nnz; ++q) {
      const int r = t.w.idx[q];
      const double wv = s * t.w.val[q];
      M(t.p, r) += wv;
      M(r, t.p) += wv;
    }
  }
  if (id_scale != 0.0) M.diagonal().array() += v * id_scale;
}

double coeff_norm_estimate(const std::vector<RankTerm>& terms, double id_scale, int K) {
  double acc = std::abs(id_scale) * std::sqrt(static_cast<double>(K));
  for (const RankTerm& t : terms) {
    double wn = 0.0;
    for (double v : t.w.val) wn += v * v;
    acc += std::abs(t.scale) * std::sqrt(2.0 * wn);
  }
  return acc;
}

// Largest alpha in (0, 1] with M + alpha * dM psd, scaled by frac.
double dense_step_length(const Eigen::LLT<Eigen::MatrixXd>& llt,
                         const Eigen::MatrixXd& dM, double frac) {
  const Eigen::MatrixXd& L = llt.matrixL();
  Eigen::MatrixXd S =
      L.triangularView<Eigen::Lower>().solve(dM).transpose();
  S = L.triangularView<Eigen::Lower>().solve(S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return 1.0;
  return std::min(1.0, -frac / lmin);
}

struct DenseState {
  Eigen::MatrixXd X, Z, Zi;
  Eigen::MatrixXd Rd;       // C + A(y) - Z
  Eigen::MatrixXd Ay;       // A(y) (without C)
  Eigen::MatrixXd W_rd;     // Zi * Rd * X
  Eigen::MatrixXd W_cor;    // Zi * dZ_aff * dX_aff
  Eigen::MatrixXd dX_aff, dZ_aff, dX, dZ;
  Eigen::LLT<Eigen::MatrixXd> lltX, lltZ;
};

struct DiagState {
  Eigen::VectorXd x, z, rd, ay, dx_aff, dz_aff, dx, dz;
};

class Solver {
 public:
  Solver(const Problem& prob, const Options& opts) : opts_(opts) {
    build(prob);
  }

  Result run();

 private:
  void build(const Problem& prob);
  void assemble_ay(const Eigen::VectorXd& y);
  bool incumbent_feasible(const Eigen::VectorXd& y) const;
  void form_schur();
  void form_rhs(double sigma_mu, bool corrector, Eigen::VectorXd& rhs) const;
  bool factor_schur();
  Eigen::VectorXd solve_schur(const Eigen::VectorXd& rhs);
  void compute_directions(const Eigen::VectorXd& dy, double sigma_mu, bool corrector);
  double step_primal(double frac) const;
  double step_dual(double frac) const;

  Options opts_;
  int m_ = 0;           // decision variables (incl. phase-I t)
  int t_index_ = -1;    // phase-I variable, -1 in objective mode
  double nu_ = 0.0;     // total cone dimension
  Eigen::VectorXd b_;
  std::vector<DenseBlock> blocks_;
  std::vector<DiagBlock> diags_;
  std::vector<DenseState> ds_;
  std::vector<DiagState> gs_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd Hfact_;
  double norm_b_ = 0.0, norm_c_ = 0.0, norm_a_ = 0.0;
};

void Solver::build(const Problem& prob) {
  blocks_ = prob.dense_blocks;
  diags_ = prob.diag_blocks;
  m_ = prob.num_vars;

  if (opts_.feasibility_mode) {
    t_index_ = m_;
    m_ += 1;
    for (auto& blk : blocks_) {
      const int slot = blk.add_var(t_index_);
      blk.identity_scale[slot] = 1.0;
    }
    b_ = Eigen::VectorXd::Zero(m_);
    b_(t_index_) = 1.0;
  } else {
    b_ = Eigen::VectorXd::Zero(m_);
    if (prob.b.size() > 0) {
      if (prob.b.size() != prob.num_vars)
        throw std::invalid_argument("sdp: objective dimension mismatch");
      b_.head(prob.num_vars) = prob.b;
    }
  }

  // Norms of the user-supplied problem drive the initial scaling; the
  // internal box below is excluded so its huge radius cannot distort it.
  nu_ = 0.0;
  norm_b_ = b_.lpNorm<Eigen::Infinity>();
  for (const auto& blk : blocks_) {
    nu_ += blk.size;
    norm_c_ = std::max(norm_c_, blk.C.norm());
    for (size_t a = 0; a < blk.var_index.size(); ++a)
      norm_a_ = std::max(norm_a_, coeff_norm_estimate(blk.terms[a],
                                                      blk.identity_scale[a], blk.size));
  }
  for (const auto& dg : diags_) {
    nu_ += dg.size;
    norm_c_ = std::max(norm_c_, dg.C.lpNorm<Eigen::Infinity>());
  }

  // Internal box |y_i| <= R keeps the primal-dual pair bounded and provides a
  // rigorous lower bound on the phase-I optimum for the infeasibility exit.
  {
    DiagBlock box;
    box.size = 2 * m_;
    box.C = Eigen::VectorXd::Constant(2 * m_, kBoxRadius);
    for (int i = 0; i < m_; ++i) {
      box.var_index.push_back(i);
      box.entries.push_back({{2 * i, 1.0}, {2 * i + 1, -1.0}});
    }
    nu_ += box.size;
    diags_.push_back(std::move(box));
  }

  // Initial iterates: well-centered multiples of the identity for the user's
  // blocks (scaled per block), the box starting exactly on its slack.
  const double xscale = std::max({10.0, norm_b_ / (1.0 + norm_a_) * 10.0});
  ds_.resize(blocks_.size());
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    const int K = blk.size;
    double local_a = 0.0;
    for (size_t a = 0; a < blk.var_index.size(); ++a)
      local_a = std::max(local_a,
                         coeff_norm_estimate(blk.terms[a], blk.identity_scale[a], K));
    const double zscale = std::max({10.0, blk.C.norm(), local_a});
    ds_[k].X = xscale * Eigen::MatrixXd::Identity(K, K);
    ds_[k].Z = zscale * Eigen::MatrixXd::Identity(K, K);
  }
  gs_.resize(diags_.size());
  for (size_t k = 0; k + 1 < diags_.size(); ++k) {
    const double zscale =
        std::max(10.0, diags_[k].C.lpNorm<Eigen::Infinity>());
    gs_[k].x = Eigen::VectorXd::Constant(diags_[k].size, xscale);
    gs_[k].z = Eigen::VectorXd::Constant(diags_[k].size, zscale);
  }
  {
    // Box rows start on their slack with complementarity balanced against the
    // dense blocks.
    DiagState& box_state = gs_.back();
    box_state.x = Eigen::VectorXd::Constant(diags_.back().size, xscale / kBoxRadius);
    box_state.z = diags_.back().C;
  }
  y_ = Eigen::VectorXd::Zero(m_);
  H_.resize(m_, m_);
}

void Solver::assemble_ay(const Eigen::VectorXd& y) {
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    DenseState& st = ds_[k];
    st.Ay = Eigen::MatrixXd::Zero(blk.size, blk.size);
    for (size_t a = 0; a < blk.var_index.size(); ++a) {
      const double v = y(blk.var_index[a]);
      if (v != 0.0) scatter_coeff(blk.terms[a], blk.identity_scale[a], v, st.Ay);
    }
  }
  for (size_t k = 0; k < diags_.size(); ++k) {
    const DiagBlock& dg = diags_[k];
    DiagState& st = gs_[k];
    st.ay = Eigen::VectorXd::Zero(dg.size);
    for (size_t a = 0; a < dg.var_index.size(); ++a) {
      const double v = y(dg.var_index[a]);
      for (const auto& [pos, val] : dg.entries[a]) st.ay(pos) += v * val;
    }
  }
}

// Check whether y (with the phase-I shift removed) satisfies every dense block.
bool Solver::incumbent_feasible(const Eigen::VectorXd& y) const {
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    Eigen::MatrixXd S = blk.C;
    for (size_t a = 0; a < blk.var_index.size(); ++a) {
      const int gi = blk.var_index[a];
      if (gi == t_index_) continue;
      const double v = y(gi);
      if (v != 0.0) scatter_coeff(blk.terms[a], blk.identity_scale[a], v, S);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 0.0) return false;
  }
  return true;
}

void Solver::form_schur() {
  H_.setZero();
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    const DenseState& st = ds_[k];
    const int K = blk.size;
    const int na = static_cast<int>(blk.var_index.size());
    const Eigen::MatrixXd ZiX = st.Zi * st.X;

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
      Eigen::MatrixXd B(K, K);
      Eigen::VectorXd xw(K), zw(K);
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 8)
#endif
      for (int a = 0; a < na; ++a) {
        const int gi = blk.var_index[a];
        // B = Zi * A_a * X, built from the rank structure of A_a.
        const double ids = blk.identity_scale[a];
        if (ids != 0.0)
          B = ids * ZiX;
        else
          B.setZero();
        for (const RankTerm& t : blk.terms[a]) {
          xw.setZero();
          zw.setZero();
          const int nnz = static_cast<int>(t.w.idx.size());
          for (int q = 0; q < nnz; ++q) {
            xw += t.w.val[q] * st.X.col(t.w.idx[q]);
            zw += t.w.val[q] * st.Zi.col(t.w.idx[q]);
          }
          B.noalias() += t.scale * st.Zi.col(t.p) * xw.transpose();
          B.noalias() += t.scale * zw * st.X.col(t.p).transpose();
        }
        for (int c = a; c < na; ++c) {
          const int gj = blk.var_index[c];
          const double h = dot_coeff(blk.terms[c], blk.identity_scale[c], B);
          if (gi <= gj)
            H_(gi, gj) += h;
          else
            H_(gj, gi) += h;
        }
      }
    }
  }
  for (size_t k = 0; k < diags_.size(); ++k) {
    const DiagBlock& dg = diags_[k];
    const DiagState& st = gs_[k];
    // Accumulate by position: only variables sharing a position interact.
    std::vector<std::vector<std::pair<int, double>>> by_pos(dg.size);
    for (size_t a = 0; a < dg.var_index.size(); ++a)
      for (const auto& [pos, val] : dg.entries[a])
        by_pos[pos].push_back({dg.var_index[a], val});
    for (int pos = 0; pos < dg.size; ++pos) {
      const double w = st.x(pos) / st.z(pos);
      const auto& vars = by_pos[pos];
      for (size_t a = 0; a < vars.size(); ++a)
        for (size_t c = a; c < vars.size(); ++c) {
          const auto [gi, va] = vars[a];
          const auto [gj, vc] = vars[c];
          if (gi <= gj)
            H_(gi, gj) += va * vc * w;
          else
            H_(gj, gi) += va * vc * w;
        }
    }
  }
  H_ = H_.selfadjointView<Eigen::Upper>();
}

void Solver::form_rhs(double sigma_mu, bool corrector, Eigen::VectorXd& rhs) const {
  rhs = -b_;
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    const DenseState& st = ds_[k];
    const int na = static_cast<int>(blk.var_index.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (int a = 0; a < na; ++a) {
      const int gi = blk.var_index[a];
      double v = sigma_mu * dot_coeff(blk.terms[a], blk.identity_scale[a], st.Zi);
      v -= dot_coeff(blk.terms[a], blk.identity_scale[a], st.W_rd);
      if (corrector) v -= dot_coeff(blk.terms[a], blk.identity_scale[a], st.W_cor);
#ifdef _OPENMP
#pragma omp atomic
#endif
      rhs(gi) += v;
    }
  }
  for (size_t k = 0; k < diags_.size(); ++k) {
    const DiagBlock& dg = diags_[k];
    const DiagState& st = gs_[k];
    for (size_t a = 0; a < dg.var_index.size(); ++a) {
      const int gi = dg.var_index[a];
      double v = 0.0;
      for (const auto& [pos, val] : dg.entries[a]) {
        double term = sigma_mu / st.z(pos) - st.rd(pos) * st.x(pos) / st.z(pos);
        if (corrector) term -= st.dz_aff(pos) * st.dx_aff(pos) / st.z(pos);
        v += val * term;
      }
      rhs(gi) += v;
    }
  }
}

bool Solver::factor_schur() {
  Hfact_ = H_;
  double reg = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (attempt > 0) {
      reg = (reg == 0.0) ? 1e-14 * (1.0 + H_.trace() / m_) : reg * 100.0;
      Hfact_ = H_;
      Hfact_.diagonal().array() += reg;
    }
    const lapack_int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', m_,
                                           Hfact_.data(), m_);
    if (info == 0) return true;
  }
  return false;
}

Eigen::VectorXd Solver::solve_schur(const Eigen::VectorXd& rhs) {
  Eigen::VectorXd sol = rhs;
  LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', m_, 1, Hfact_.data(), m_, sol.data(), m_);
  return sol;
}

void Solver::compute_directions(const Eigen::VectorXd& dy, double sigma_mu,
                                bool corrector) {
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const DenseBlock& blk = blocks_[k];
    DenseState& st = ds_[k];
    Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(blk.size, blk.size);
    for (size_t a = 0; a < blk.var_index.size(); ++a) {
      const double v = dy(blk.var_index[a]);
      if (v != 0.0) scatter_coeff(blk.terms[a], blk.identity_scale[a], v, dA);
    }
    Eigen::MatrixXd& dZ = corrector ? st.dZ : st.dZ_aff;
    Eigen::MatrixXd& dX = corrector ? st.dX : st.dX_aff;
    dZ = st.Rd + dA;
    dX = -st.X - st.Zi * (dZ * st.X);
    if (sigma_mu != 0.0) dX += sigma_mu * st.Zi;
    if (corrector) dX -= st.W_cor;
    dX = 0.5 * (dX + dX.transpose()).eval();
  }
  for (size_t k = 0; k < diags_.size(); ++k) {
    const DiagBlock& dg = diags_[k];
    DiagState& st = gs_[k];
    Eigen::VectorXd da = Eigen::VectorXd::Zero(dg.size);
    for (size_t a = 0; a < dg.var_index.size(); ++a) {
      const double v = dy(dg.var_index[a]);
      for (const auto& [pos, val] : dg.entries[a]) da(pos) += v * val;
    }
    Eigen::VectorXd& dz = corrector ? st.dz : st.dz_aff;
    Eigen::VectorXd& dx = corrector ? st.dx : st.dx_aff;
    dz = st.rd + da;
    dx = -st.x - dz.cwiseProduct(st.x).cwiseQuotient(st.z);
    if (sigma_mu != 0.0) dx += sigma_mu * st.z.cwiseInverse();
    if (corrector)
      dx -= st.dz_aff.cwiseProduct(st.dx_aff).cwiseQuotient(st.z);
  }
}

double Solver::step_primal(double frac) const {
  double alpha = 1.0;
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const Eigen::MatrixXd& dX = ds_[k].dX;
    alpha = std::min(alpha, dense_step_length(ds_[k].lltX, dX, frac));
  }
  for (size_t k = 0; k < gs_.size(); ++k) {
    const DiagState& st = gs_[k];
    for (int i = 0; i < st.x.size(); ++i)
      if (st.dx(i) < 0.0) alpha = std::min(alpha, -frac * st.x(i) / st.dx(i));
  }
  return alpha;
}

double Solver::step_dual(double frac) const {
  double alpha = 1.0;
  for (size_t k = 0; k < blocks_.size(); ++k) {
    const Eigen::MatrixXd& dZ = ds_[k].dZ;
    alpha = std::min(alpha, dense_step_length(ds_[k].lltZ, dZ, frac));
  }
  for (size_t k = 0; k < gs_.size(); ++k) {
    const DiagState& st = gs_[k];
    for (int i = 0; i < st.z.size(); ++i)
      if (st.dz(i) < 0.0) alpha = std::min(alpha, -frac * st.z(i) / st.dz(i));
  }
  return alpha;
}

Result Solver::run() {
  Result res;
  res.y = Eigen::VectorXd::Zero(m_);
  int stall_count = 0;

  for (int iter = 0; iter < opts_.max_iter; ++iter) {
    res.iterations = iter;

    // Factorizations of the current iterates.
    for (size_t k = 0; k < blocks_.size(); ++k) {
      DenseState& st = ds_[k];
      st.lltX.compute(st.X);
      st.lltZ.compute(st.Z);
      if (st.lltX.info() != Eigen::Success || st.lltZ.info() != Eigen::Success) {
        res.status = SolveStatus::NumericalFailure;
        res.note = "iterate left the cone";
        return res;
      }
      st.Zi = st.lltZ.solve(Eigen::MatrixXd::Identity(blocks_[k].size, blocks_[k].size));
    }

    // Residuals.
    assemble_ay(y_);
    double gap = 0.0;
    double pobj = 0.0;
    double dual_err = 0.0;
    for (size_t k = 0; k < blocks_.size(); ++k) {
      DenseState& st = ds_[k];
      st.Rd = blocks_[k].C + st.Ay - st.Z;
      gap += (st.X.cwiseProduct(st.Z)).sum();
      pobj -= (blocks_[k].C.cwiseProduct(st.X)).sum();
      dual_err = std::max(dual_err, st.Rd.norm() / (1.0 + norm_c_));
      st.W_rd = st.Zi * (st.Rd * st.X);
    }
    for (size_t k = 0; k < diags_.size(); ++k) {
      DiagState& st = gs_[k];
      st.rd = diags_[k].C + st.ay - st.z;
      gap += st.x.dot(st.z);
      pobj -= diags_[k].C.dot(st.x);
      dual_err = std::max(dual_err, st.rd.lpNorm<Eigen::Infinity>() / (1.0 + norm_c_));
    }
    const double mu = gap / nu_;

    // Primal residual b_i - <A_i, X>.
    Eigen::VectorXd rp = b_;
    for (size_t k = 0; k < blocks_.size(); ++k) {
      const DenseBlock& blk = blocks_[k];
      for (size_t a = 0; a < blk.var_index.size(); ++a)
        rp(blk.var_index[a]) -=
            dot_coeff(blk.terms[a], blk.identity_scale[a], ds_[k].X);
    }
    for (size_t k = 0; k < diags_.size(); ++k) {
      const DiagBlock& dg = diags_[k];
      for (size_t a = 0; a < dg.var_index.size(); ++a) {
        double v = 0.0;
        for (const auto& [pos, val] : dg.entries[a]) v += val * gs_[k].x(pos);
        rp(dg.var_index[a]) -= v;
      }
    }
    const double primal_err = rp.lpNorm<Eigen::Infinity>() / (1.0 + norm_b_);
    const double dobj = b_.dot(y_);
    const double rel_gap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));

    res.objective = dobj;
    res.rel_gap = rel_gap;
    res.primal_err = primal_err;
    res.dual_err = dual_err;
    if (opts_.verbose) {
      std::printf("  sdp it %2d  mu %9.2e  gap %9.2e  rp %9.2e  rd %9.2e  obj %12.5e\n",
                  iter, mu, rel_gap, primal_err, dual_err, dobj);
      std::fflush(stdout);
    }

    if (!std::isfinite(mu) || !std::isfinite(dobj)) {
      res.status = SolveStatus::NumericalFailure;
      res.note = "nonfinite iterate";
      return res;
    }

    // Feasibility-mode exits.
    if (opts_.feasibility_mode) {
      if (incumbent_feasible(y_)) {
        res.status = SolveStatus::Feasible;
        res.y = y_.head(t_index_);
        res.note = "incumbent satisfies all blocks";
        return res;
      }
      // Weak duality: t* >= pobj - R * ||rp||_1 for any primal-feasible point.
      const double lower = pobj - kBoxRadius * rp.lpNorm<1>();
      if (lower > 0.0 && primal_err < opts_.eps_feas * 10) {
        res.status = SolveStatus::Infeasible;
        res.y = y_.head(t_index_);
        res.note = "phase-I objective provably positive";
        return res;
      }
    }

    // Standard convergence.
    if (rel_gap < opts_.eps_gap && primal_err < opts_.eps_feas * 100 &&
        dual_err < opts_.eps_feas * 100) {
      if (opts_.feasibility_mode) {
        if (incumbent_feasible(y_)) {
          res.status = SolveStatus::Feasible;
          res.y = y_.head(t_index_);
        } else if (dobj > 0.0) {
          res.status = SolveStatus::Infeasible;
          res.y = y_.head(t_index_);
        } else {
          res.status = SolveStatus::NumericalFailure;
          res.y = y_.head(t_index_);
          res.note = "converged without a certified verdict";
        }
      } else {
        res.status = SolveStatus::Optimal;
        res.y = y_;
      }
      return res;
    }

    // Predictor.
    form_schur();
    if (!factor_schur()) {
      res.status = SolveStatus::NumericalFailure;
      res.note = "Schur complement factorization failed";
      return res;
    }
    Eigen::VectorXd rhs(m_);
    form_rhs(0.0, false, rhs);
    Eigen::VectorXd dy_aff = solve_schur(rhs);
    compute_directions(dy_aff, 0.0, false);

    double ap = 1.0, ad = 1.0;
    {
      // Affine step lengths for sigma selection.
      for (size_t k = 0; k < blocks_.size(); ++k) {
        ap = std::min(ap, dense_step_length(ds_[k].lltX, ds_[k].dX_aff, opts_.step_frac));
        ad = std::min(ad, dense_step_length(ds_[k].lltZ, ds_[k].dZ_aff, opts_.step_frac));
      }
      for (size_t k = 0; k < gs_.size(); ++k) {
        const DiagState& st = gs_[k];
        for (int i = 0; i < st.x.size(); ++i) {
          if (st.dx_aff(i) < 0.0)
            ap = std::min(ap, -opts_.step_frac * st.x(i) / st.dx_aff(i));
          if (st.dz_aff(i) < 0.0)
            ad = std::min(ad, -opts_.step_frac * st.z(i) / st.dz_aff(i));
        }
      }
    }
    double gap_aff = 0.0;
    for (size_t k = 0; k < blocks_.size(); ++k)
      gap_aff += ((ds_[k].X + ap * ds_[k].dX_aff)
                      .cwiseProduct(ds_[k].Z + ad * ds_[k].dZ_aff))
                     .sum();
    for (size_t k = 0; k < gs_.size(); ++k)
      gap_aff += (gs_[k].x + ap * gs_[k].dx_aff).dot(gs_[k].z + ad * gs_[k].dz_aff);
    double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
    sigma = std::min(std::max(sigma, 1e-10), 1.0);

    // Corrector.
    for (size_t k = 0; k < blocks_.size(); ++k)
      ds_[k].W_cor = ds_[k].Zi * (ds_[k].dZ_aff * ds_[k].dX_aff);
    form_rhs(sigma * mu, true, rhs);
    Eigen::VectorXd dy = solve_schur(rhs);
    compute_directions(dy, sigma * mu, true);

    double alpha_p = step_primal(opts_.step_frac);
    double alpha_d = step_dual(opts_.step_frac);

    // Fraction-to-boundary can still overshoot numerically; back off until
    // both iterates stay factorizable.
    auto cone_ok = [&](double ap2, double ad2) {
      for (size_t k = 0; k < blocks_.size(); ++k) {
        Eigen::LLT<Eigen::MatrixXd> lx(ds_[k].X + ap2 * ds_[k].dX);
        if (lx.info() != Eigen::Success) return false;
        Eigen::LLT<Eigen::MatrixXd> lz(ds_[k].Z + ad2 * ds_[k].dZ);
        if (lz.info() != Eigen::Success) return false;
      }
      for (size_t k = 0; k < gs_.size(); ++k) {
        if (((gs_[k].x + ap2 * gs_[k].dx).array() <= 0.0).any()) return false;
        if (((gs_[k].z + ad2 * gs_[k].dz).array() <= 0.0).any()) return false;
      }
      return true;
    };
    int backoff = 0;
    while (!cone_ok(alpha_p, alpha_d) && backoff < 40) {
      alpha_p *= 0.6;
      alpha_d *= 0.6;
      ++backoff;
    }

    if (alpha_p < 1e-10 && alpha_d < 1e-10) {
      if (++stall_count >= 3) {
        res.status = SolveStatus::NumericalFailure;
        res.note = "step lengths collapsed";
        res.y = opts_.feasibility_mode ? Eigen::VectorXd(y_.head(t_index_)) : y_;
        return res;
      }
    } else {
      stall_count = 0;
    }

    for (size_t k = 0; k < blocks_.size(); ++k) {
      ds_[k].X += alpha_p * ds_[k].dX;
      ds_[k].Z += alpha_d * ds_[k].dZ;
    }
    for (size_t k = 0; k < gs_.size(); ++k) {
      gs_[k].x += alpha_p * gs_[k].dx;
      gs_[k].z += alpha_d * gs_[k].dz;
    }
    y_ += alpha_d * dy;
  }

  res.status = SolveStatus::NumericalFailure;
  res.note = "iteration limit reached";
  res.y = opts_.feasibility_mode ? Eigen::VectorXd(y_.head(t_index_)) : y_;
  return res;
}

}  // namespace

void Problem::add_box(double r) {
  DiagBlock box;
  box.size = 2 * num_vars;
  box.C = Eigen::VectorXd::Constant(2 * num_vars, r);
  for (int i = 0; i < num_vars; ++i) {
    box.var_index.push_back(i);
    box.entries.push_back({{2 * i, 1.0}, {2 * i + 1, -1.0}});
  }
  diag_blocks.push_back(std::move(box));
}

Result solve(const Problem& problem, const Options& opts) {
  Solver solver(problem, opts);
  return solver.run();
}

}  // namespace ringctl::sdp
