#pragma once

#include "motionhmm/matrix.hpp"

namespace motionhmm {

// A fixed-rate multivariate time series: one row per frame. dt is the frame
// spacing in seconds; derivative features depend on it.
struct ObservationSequence {
  Matrix frames;
  double dt = 1.0;

  std::size_t length() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

}  // namespace motionhmm
