#pragma once

#include <functional>

#include "parcel/matrix.hpp"

namespace parcel {

// Central-difference gradient (f(x+h) - f(x-h)) / (2h), one entry at a time.
// Throws if f returns a non-finite value or step <= 0.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                  const Matrix& at, double step);

}  // namespace parcel
