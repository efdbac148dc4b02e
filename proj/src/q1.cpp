#include "fbs/q1.hpp"

namespace fbs {

Q1Element::Q1Element(const Grid& grid) : dim_(grid.dim()), corners_(1 << grid.dim()) {
  for (int d = 0; d < dim_; ++d)
    for (int e = 0; e < dim_; ++e)
      for (int a = 0; a < corners_; ++a)
        for (int b = 0; b < corners_; ++b) {
          double v = 1.0;
          for (int k = 0; k < dim_; ++k) {
            const double h = grid.spacing(k);
            const int ak = (a >> k) & 1;
            const int bk = (b >> k) & 1;
            if (k == d && k == e) {
              v *= (ak == bk ? 1.0 : -1.0) / h;
            } else if (k == d) {
              v *= ak ? 0.5 : -0.5;  // integral of phi'_a phi_b
            } else if (k == e) {
              v *= bk ? 0.5 : -0.5;
            } else {
              v *= h * (ak == bk ? 1.0 / 3.0 : 1.0 / 6.0);
            }
          }
          m_[((d * 3 + e) * 8 + a) * 8 + b] = v;
        }
}

void Q1Element::stiffness(const double* abar, std::array<double, 64>& k) const {
  for (int a = 0; a < corners_; ++a)
    for (int b = 0; b < corners_; ++b) {
      double s = 0.0;
      for (int d = 0; d < dim_; ++d)
        for (int e = 0; e < dim_; ++e) s += abar[d * dim_ + e] * m(d, e, a, b);
      k[a * 8 + b] = s;
    }
}

}  // namespace fbs
