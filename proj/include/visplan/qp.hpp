#pragma once

// Box-constrained convex subproblem of one trust-region step:
//
//   min_d  const + q'd + 1/2 d'Pd + sum_k w_k f_k(A_k d + c_k)   s.t. |d|_inf <= radius
//
// with f_k either the Euclidean norm or the scalar hinge max(0, .). Solved with
// ADMM on the splitting z = A d + c, x = d (box), using an adaptive penalty rho.

#include "visplan/cost_terms.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

namespace visplan {

struct ConvexModel
{
  struct Block
  {
    TermKind kind = TermKind::Norm;
    double weight = 1.0;
    Eigen::Index row = 0;
    Eigen::Index size = 0;
  };

  double constant = 0.0;
  Eigen::VectorXd q;
  Eigen::MatrixXd P;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A; // valid after finalize()
  Eigen::VectorXd c;
  std::vector<Block> blocks;

  explicit ConvexModel(Eigen::Index n = 0)
      : q(Eigen::VectorXd::Zero(n)), P(Eigen::MatrixXd::Zero(n, n)), A(0, n), c(0)
  {
  }

  Eigen::Index dim() const { return q.size(); }
  Eigen::Index rows() const { return rows_; }

  /// Adds a linearized residual term; `J` must already be restricted to the model's columns.
  template <typename Derived>
  void add(const ResidualTerm& t, const Eigen::MatrixBase<Derived>& J)
  {
    if (t.kind == TermKind::Squared) {
      constant += t.weight * t.r.squaredNorm();
      q.noalias() += 2.0 * t.weight * J.transpose() * t.r;
      P.noalias() += 2.0 * t.weight * J.transpose() * J;
      return;
    }
    const Eigen::Index m = t.r.size();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < J.cols(); ++j)
        if (J(i, j) != 0.0) triplets_.emplace_back(rows_ + i, j, J(i, j));
      c_.push_back(t.r[i]);
    }
    blocks.push_back({t.kind, t.weight, rows_, m});
    rows_ += m;
  }

  /// Assembles A and c from the added blocks.
  void finalize()
  {
    A.resize(rows_, dim());
    A.setFromTriplets(triplets_.begin(), triplets_.end());
    c = Eigen::Map<const Eigen::VectorXd>(c_.data(), rows_);
  }

  double nonsmooth_value(const Eigen::VectorXd& Ad_c) const
  {
    double v = 0.0;
    for (const auto& b : blocks) {
      const auto seg = Ad_c.segment(b.row, b.size);
      v += b.weight * (b.kind == TermKind::Norm ? seg.norm() : std::max(0.0, seg[0]));
    }
    return v;
  }

  double value(const Eigen::VectorXd& d) const
  {
    double v = constant + q.dot(d) + 0.5 * d.dot(P * d);
    if (A.rows() > 0) v += nonsmooth_value(A * d + c);
    return v;
  }

private:
  Eigen::Index rows_ = 0;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> c_;
};

struct AdmmSettings
{
  double rho = 1.0;
  int max_iters = 600;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  int adapt_every = 25;
};

class AdmmSolver
{
public:
  AdmmSolver(const ConvexModel& model, AdmmSettings settings = {}) : m_(model), s_(settings)
  {
    if (m_.A.rows() != m_.rows()) throw std::logic_error("ConvexModel::finalize() must be called before solving");
    AtA_ = Eigen::MatrixXd(m_.A.transpose() * m_.A);
    z_ = m_.c;
    u_ = Eigen::VectorXd::Zero(m_.A.rows());
    zb_ = Eigen::VectorXd::Zero(m_.dim());
    ub_ = Eigen::VectorXd::Zero(m_.dim());
    refactor(s_.rho);
  }

  /// Solves for the given box radius, warm-starting from the previous call.
  Eigen::VectorXd solve(double radius)
  {
    const Eigen::Index n = m_.dim();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (n == 0) return d;
    zb_ = zb_.cwiseMax(-radius).cwiseMin(radius);
    for (int it = 0; it < s_.max_iters; ++it) {
      tmp_ = z_ - m_.c - u_;
      rhs_.noalias() = m_.A.transpose() * tmp_;
      rhs_ = rho_ * (rhs_ + zb_ - ub_) - m_.q;
      d = llt_.solve(rhs_);

      const Eigen::VectorXd Ad_c = m_.A * d + m_.c;
      const Eigen::VectorXd z_prev = z_, zb_prev = zb_;
      z_ = prox(Ad_c + u_);
      zb_ = (d + ub_).cwiseMax(-radius).cwiseMin(radius);
      u_ += Ad_c - z_;
      ub_ += d - zb_;

      const double r_prim = std::sqrt((Ad_c - z_).squaredNorm() + (d - zb_).squaredNorm());
      tmp_ = z_ - z_prev;
      rhs_.noalias() = m_.A.transpose() * tmp_;
      const double r_dual = rho_ * (rhs_ + zb_ - zb_prev).norm();
      const double scale_prim = std::max({Ad_c.norm(), z_.norm(), d.norm(), zb_.norm(), 1.0});
      const double scale_dual = std::max(rho_ * std::sqrt(u_.squaredNorm() + ub_.squaredNorm()), 1.0);
      if (r_prim <= s_.eps_abs + s_.eps_rel * scale_prim && r_dual <= s_.eps_abs + s_.eps_rel * scale_dual) break;

      if (s_.adapt_every > 0 && (it + 1) % s_.adapt_every == 0) {
        const double ratio = std::sqrt((r_prim / scale_prim) / std::max(r_dual / scale_dual, 1e-300));
        if (ratio > 5.0 || ratio < 0.2) {
          const double next = std::clamp(rho_ * ratio, 1e-6, 1e6);
          u_ *= rho_ / next;
          ub_ *= rho_ / next;
          refactor(next);
        }
      }
    }
    // the returned step always honors the trust region
    return zb_;
  }

private:
  void refactor(double rho)
  {
    rho_ = rho;
    Eigen::MatrixXd K = m_.P + rho_ * AtA_;
    K.diagonal().array() += rho_;
    llt_.compute(K);
  }

  Eigen::VectorXd prox(const Eigen::VectorXd& v) const
  {
    Eigen::VectorXd out = v;
    for (const auto& b : m_.blocks) {
      const double k = b.weight / rho_;
      auto seg = out.segment(b.row, b.size);
      if (b.kind == TermKind::Norm) {
        const double n = seg.norm();
        seg *= n > k ? (1.0 - k / n) : 0.0;
      } else {
        const double x = seg[0];
        seg[0] = x > k ? x - k : (x < 0.0 ? x : 0.0);
      }
    }
    return out;
  }

  const ConvexModel& m_;
  AdmmSettings s_;
  double rho_ = 1.0;
  Eigen::MatrixXd AtA_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd z_, u_, zb_, ub_;
  Eigen::VectorXd tmp_, rhs_;
};

} // namespace visplan
