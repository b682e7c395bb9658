#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motionhmm/dataset.hpp"
#include "motionhmm/matrix.hpp"
#include "motionhmm/observation.hpp"

namespace motionhmm {

// Which derived feature blocks make up an observation vector, plus the
// preprocessing switches. Feature names come from feature_catalog().
struct FeatureSpec {
  std::vector<std::string> features;
  bool normalized = true;   // root-frame normalization of poses/rotations
  bool smoothed = false;    // moving-average smoothing
  std::size_t window = 4;   // smoothing window parameter W
  bool scaled = true;       // min-max scaling to [-1, 1]
};

// Per-dimension [min, max] fitted on training data only.
struct ScalerParams {
  std::vector<std::array<double, 2>> ranges;
};

// Intrinsic rotation matrix for yaw (z), pitch (y), roll (x): the product
// Rz(yaw) * Ry(pitch) * Rx(roll), returned as a 3x3 matrix.
Matrix rotation_matrix(double yaw, double pitch, double roll);

// Removes 2*pi jumps column-wise so consecutive angle differences stay
// within (-pi, pi].
Matrix unwrap_angles(const Matrix& angles);

// The rigid transform that moves a recording into its root-relative frame:
// subtract the frame-0 root position, then rotate by the inverse of the
// frame-0 yaw (roll and pitch are deliberately zeroed so the vertical axis
// is preserved and the transform is invariant under ground-plane motion).
struct RootTransform {
  std::array<double, 3> origin{};
  Matrix inverse_rotation;  // 3x3
};

RootTransform root_frame_transform(const Matrix& root_pos, const Matrix& root_rot);

// Applies the transform to every 3-column group of points (translate then
// rotate) or free vectors (rotate only).
Matrix transform_points(const RootTransform& tf, const Matrix& points);
Matrix transform_vectors(const RootTransform& tf, const Matrix& vectors);

struct NormalizedRoot {
  Matrix position;  // T x 3
  Matrix rotation;  // T x 3, unwrapped, frame 0 at zero
};

NormalizedRoot normalize_root(const Matrix& root_pos, const Matrix& root_rot);

// Central differences in the interior, one-sided at the first and last
// frame. Requires at least two frames.
Matrix derivative(const Matrix& series, double dt);

// Moving average with half-width W/2 (even W, W+1 samples) or (W-1)/2 (odd
// W, W samples); windows shrink at the boundaries and every window is
// normalized by the number of samples actually inside it.
Matrix smooth(const Matrix& series, std::size_t window);

// Euclidean norm of each consecutive group of `group_width` columns.
Matrix euclidean_norms(const Matrix& series, std::size_t group_width);

// Mass-weighted mean of the segment centers, per frame (T x 3).
Matrix center_of_mass(const MotionRecord& record);

// Whole-body angular momentum about the center of mass, per frame:
// sum_i m_i (r_i x v_i) + I_i w_i with r_i, v_i relative to the body's
// center of mass and its velocity.
Matrix angular_momentum(const MotionRecord& record, const Matrix& com,
                        const Matrix& com_velocity);

ScalerParams fit_scaler(const std::vector<ObservationSequence>& sequences);
void scale_in_place(ObservationSequence& sequence, const ScalerParams& scaler);

// The full set of derivable feature names.
const std::vector<std::string>& feature_catalog();

// Width the named feature would have for this record (depends on the raw
// channel widths for joint/marker features).
std::size_t feature_dimension(const MotionRecord& record, const std::string& feature);
std::size_t spec_dimension(const MotionRecord& record, const FeatureSpec& spec);

// Assembles the observation sequence for one record: normalize, derive,
// smooth, then scale (when a scaler is supplied and spec.scaled is set).
// Feature blocks appear in spec order. Throws validation_error when a
// required channel or segment block is missing.
ObservationSequence build_observation(const MotionRecord& record,
                                      const FeatureSpec& spec,
                                      const ScalerParams* scaler = nullptr);

std::string feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const std::string& text);
std::string scaler_to_json(const ScalerParams& scaler);
ScalerParams scaler_from_json(const std::string& text);

}  // namespace motionhmm
