#pragma once

#include "rjepa/errors.hpp"
#include "rjepa/matrix.hpp"

namespace rjepa {

// Contract for cells whose parameter-to-state map hits exactly one target unit
// per parameter (R_{k,p} = delta_{ki} * Rhat_{ij}) and whose state-to-state
// Jacobian is diagonal. Those two facts are what let the sensitivity tensor
// collapse to one n x n matrix per parameter block.
struct TwoPointFactors {
  Vec j_diag;    // J_ii(t): diagonal state Jacobian
  Matrix r_hat;  // Rhat_ij(t): direct parameter source
};

class TwoPointCell {
 public:
  virtual ~TwoPointCell() = default;
  virtual int state_dim() const = 0;
  virtual Vec step(const Vec& state, const Vec& x) const = 0;
  virtual TwoPointFactors factors(const Vec& state_prev, const Vec& x) const = 0;
};

// One time-decay layer viewed through the contract: parameter block P,
// c(t) = tau * c(t-1) + P x(t), so J_ii = tau and Rhat_ij = x_j.
class TimeDecayLayerCell final : public TwoPointCell {
 public:
  TimeDecayLayerCell(double tau, Matrix p) : tau_(tau), p_(std::move(p)) {}

  int state_dim() const override { return p_.rows(); }

  Vec step(const Vec& state, const Vec& x) const override {
    Vec next = matvec(p_, x);
    vec_axpy(next, tau_, state);
    return next;
  }

  TwoPointFactors factors(const Vec& state_prev, const Vec& x) const override {
    if (static_cast<int>(state_prev.size()) != p_.rows() ||
        static_cast<int>(x.size()) != p_.cols())
      throw ShapeError("TimeDecayLayerCell: factor dims mismatch");
    TwoPointFactors f;
    f.j_diag = Vec(p_.rows(), tau_);
    f.r_hat = Matrix(p_.rows(), p_.cols());
    for (int i = 0; i < p_.rows(); ++i)
      for (int j = 0; j < p_.cols(); ++j) f.r_hat(i, j) = x[j];
    return f;
  }

  const Matrix& p() const { return p_; }
  double tau() const { return tau_; }

 private:
  double tau_;
  Matrix p_;
};

}  // namespace rjepa
