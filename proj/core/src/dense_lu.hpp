#pragma once

// Partial-pivoting LU for the small dense complex Jacobians met while
// tracking. Pivots on squared modulus, which avoids hypot calls.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Core>

namespace geoloc::homotopy::detail {

class DenseLU {
 public:
  using Complex = std::complex<double>;

  // Returns false when a zero pivot is met.
  bool compute(const Eigen::MatrixXcd& a) {
    const Eigen::Index n = a.rows();
    n_ = n;
    lu_ = a;
    perm_.resize(static_cast<std::size_t>(n));
    min_pivot_ = INFINITY;
    max_pivot_ = 0.0;
    Complex* m = lu_.data();
    auto at = [m, n](Eigen::Index r, Eigen::Index c) -> Complex& { return m[c * n + r]; };
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index p = k;
      double best = std::norm(at(k, k));
      for (Eigen::Index r = k + 1; r < n; ++r) {
        const double v = std::norm(at(r, k));
        if (v > best) {
          best = v;
          p = r;
        }
      }
      perm_[static_cast<std::size_t>(k)] = p;
      if (p != k) {
        for (Eigen::Index c = 0; c < n; ++c) std::swap(at(k, c), at(p, c));
      }
      min_pivot_ = std::min(min_pivot_, best);
      max_pivot_ = std::max(max_pivot_, best);
      if (!(best > 0.0) || !std::isfinite(best)) return false;
      const Complex inv = 1.0 / at(k, k);
      for (Eigen::Index r = k + 1; r < n; ++r) at(r, k) *= inv;
      for (Eigen::Index c = k + 1; c < n; ++c) {
        const Complex u = at(k, c);
        if (u == Complex(0.0)) continue;
        Complex* col = m + c * n;
        const Complex* lcol = m + k * n;
        for (Eigen::Index r = k + 1; r < n; ++r) col[r] -= lcol[r] * u;
      }
    }
    return true;
  }

  void solve_in_place(Eigen::VectorXcd& b) const {
    const Eigen::Index n = n_;
    const Complex* m = lu_.data();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index p = perm_[static_cast<std::size_t>(k)];
      if (p != k) std::swap(b[k], b[p]);
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const Complex v = b[c];
      for (Eigen::Index r = c + 1; r < n; ++r) b[r] -= m[c * n + r] * v;
    }
    for (Eigen::Index c = n; c-- > 0;) {
      b[c] /= m[c * n + c];
      const Complex v = b[c];
      for (Eigen::Index r = 0; r < c; ++r) b[r] -= m[c * n + r] * v;
    }
  }

  // min |u_kk| / max |u_kk|.
  double pivot_ratio() const {
    return max_pivot_ > 0.0 ? std::sqrt(min_pivot_ / max_pivot_) : 0.0;
  }

 private:
  Eigen::Index n_ = 0;
  Eigen::MatrixXcd lu_;
  std::vector<Eigen::Index> perm_;
  double min_pivot_ = 0.0;
  double max_pivot_ = 0.0;
};

}  // namespace geoloc::homotopy::detail
