#include "parcel/grad.hpp"

#include <cmath>
#include <stdexcept>

namespace parcel {

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                  const Matrix& at, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  Matrix grad(at.rows, at.cols);
  Matrix probe = at;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + step;
    const double f_plus = f(probe);
    probe.data[i] = saved - step;
    const double f_minus = f(probe);
    probe.data[i] = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw std::runtime_error("finite_difference_gradient: non-finite function value");
    }
    grad.data[i] = (f_plus - f_minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace parcel
