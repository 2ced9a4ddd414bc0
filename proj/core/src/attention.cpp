#include "w3ar/attention.hpp"

#include <cmath>
#include <sstream>

#include "w3ar/error.hpp"

namespace w3ar {

AttentionMap validate_attention(Matrix raw, double tolerance,
                                std::optional<double> frame_hop_ms) {
  if (raw.rows() == 0 || raw.cols() == 0) {
    std::ostringstream msg;
    msg << "attention map is " << raw.rows() << "x" << raw.cols();
    throw Error(ErrorCode::EmptyMatrix, msg.str());
  }

  std::size_t worst_row = 0;
  double worst_residual = -1.0;
  for (std::size_t t = 0; t < raw.rows(); ++t) {
    double sum = 0.0;
    const auto row = raw.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double w = row[j];
      if (!std::isfinite(w)) {
        std::ostringstream msg;
        msg << "weight at row " << t << ", frame " << j << " is not finite";
        throw Error(ErrorCode::NonFiniteWeight, msg.str());
      }
      if (w < 0.0) {
        std::ostringstream msg;
        msg << "weight at row " << t << ", frame " << j << " is " << w;
        throw Error(ErrorCode::NegativeWeight, msg.str());
      }
      sum += w;
    }
    const double residual = std::abs(sum - 1.0);
    if (residual > worst_residual) {
      worst_residual = residual;
      worst_row = t;
    }
  }

  if (worst_residual > tolerance) {
    std::ostringstream msg;
    msg << "worst row " << worst_row << " has |sum - 1| = " << worst_residual
        << " (tolerance " << tolerance << ")";
    throw Error(ErrorCode::RowNotNormalized, msg.str());
  }

  AttentionMap map(std::move(raw));
  map.set_frame_hop_ms(frame_hop_ms);
  return map;
}

}  // namespace w3ar
