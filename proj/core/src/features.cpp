#include "motionhmm/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include <json.hpp>

#include "motionhmm/errors.hpp"
#include "motionhmm/text.hpp"

namespace motionhmm {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

Matrix mat3_mul(const Matrix& a, const Matrix& b) {
  Matrix c(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

}  // namespace

Matrix rotation_matrix(double yaw, double pitch, double roll) {
  Matrix rz = Matrix::from_rows({{std::cos(yaw), -std::sin(yaw), 0.0},
                                 {std::sin(yaw), std::cos(yaw), 0.0},
                                 {0.0, 0.0, 1.0}});
  Matrix ry = Matrix::from_rows({{std::cos(pitch), 0.0, std::sin(pitch)},
                                 {0.0, 1.0, 0.0},
                                 {-std::sin(pitch), 0.0, std::cos(pitch)}});
  Matrix rx = Matrix::from_rows({{1.0, 0.0, 0.0},
                                 {0.0, std::cos(roll), -std::sin(roll)},
                                 {0.0, std::sin(roll), std::cos(roll)}});
  return mat3_mul(mat3_mul(rz, ry), rx);
}

Matrix unwrap_angles(const Matrix& angles) {
  Matrix out = angles;
  for (std::size_t c = 0; c < angles.cols(); ++c) {
    for (std::size_t t = 1; t < angles.rows(); ++t) {
      double d = angles(t, c) - angles(t - 1, c);
      // shift d by whole turns until it lies in (-pi, pi]
      double wraps = std::floor((d + kTwoPi / 2.0) / kTwoPi);
      out(t, c) = out(t - 1, c) + d - wraps * kTwoPi;
    }
  }
  return out;
}

RootTransform root_frame_transform(const Matrix& root_pos, const Matrix& root_rot) {
  if (root_pos.rows() == 0 || root_pos.cols() != 3 || root_rot.cols() != 3)
    throw validation_error("root transform needs T x 3 position and rotation");
  RootTransform tf;
  for (int d = 0; d < 3; ++d) tf.origin[static_cast<std::size_t>(d)] = root_pos(0, d);
  // only the heading is removed; roll and pitch are forced to zero so the
  // vertical axis survives (and a noisy tilt estimate cannot skew the frame)
  double yaw0 = root_rot(0, 0);
  tf.inverse_rotation = rotation_matrix(-yaw0, 0.0, 0.0);
  return tf;
}

Matrix transform_points(const RootTransform& tf, const Matrix& points) {
  if (points.cols() % 3 != 0)
    throw validation_error("point columns must come in groups of 3");
  Matrix out(points.rows(), points.cols());
  for (std::size_t t = 0; t < points.rows(); ++t) {
    for (std::size_t g = 0; g < points.cols(); g += 3) {
      double v[3];
      for (int d = 0; d < 3; ++d)
        v[d] = points(t, g + static_cast<std::size_t>(d)) -
               tf.origin[static_cast<std::size_t>(d)];
      for (int i = 0; i < 3; ++i)
        out(t, g + static_cast<std::size_t>(i)) = tf.inverse_rotation(i, 0) * v[0] +
                                                  tf.inverse_rotation(i, 1) * v[1] +
                                                  tf.inverse_rotation(i, 2) * v[2];
    }
  }
  return out;
}

Matrix transform_vectors(const RootTransform& tf, const Matrix& vectors) {
  if (vectors.cols() % 3 != 0)
    throw validation_error("vector columns must come in groups of 3");
  Matrix out(vectors.rows(), vectors.cols());
  for (std::size_t t = 0; t < vectors.rows(); ++t)
    for (std::size_t g = 0; g < vectors.cols(); g += 3)
      for (int i = 0; i < 3; ++i)
        out(t, g + static_cast<std::size_t>(i)) =
            tf.inverse_rotation(i, 0) * vectors(t, g) +
            tf.inverse_rotation(i, 1) * vectors(t, g + 1) +
            tf.inverse_rotation(i, 2) * vectors(t, g + 2);
  return out;
}

NormalizedRoot normalize_root(const Matrix& root_pos, const Matrix& root_rot) {
  RootTransform tf = root_frame_transform(root_pos, root_rot);
  NormalizedRoot out;
  out.position = transform_points(tf, root_pos);
  out.rotation = unwrap_angles(root_rot);
  for (std::size_t t = out.rotation.rows(); t-- > 0;)
    for (int d = 0; d < 3; ++d) out.rotation(t, d) -= out.rotation(0, d);
  return out;
}

Matrix derivative(const Matrix& series, double dt) {
  if (series.rows() < 2)
    throw validation_error("derivative needs at least two frames");
  std::size_t T = series.rows();
  Matrix out(T, series.cols());
  for (std::size_t c = 0; c < series.cols(); ++c) {
    out(0, c) = (series(1, c) - series(0, c)) / dt;
    for (std::size_t t = 1; t + 1 < T; ++t)
      out(t, c) = (series(t + 1, c) - series(t - 1, c)) / (2.0 * dt);
    out(T - 1, c) = (series(T - 1, c) - series(T - 2, c)) / dt;
  }
  return out;
}

Matrix smooth(const Matrix& series, std::size_t window) {
  if (window == 0) return series;
  std::size_t half = window / 2;
  std::size_t T = series.rows();
  Matrix out(T, series.cols());
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t lo = t >= half ? t - half : 0;
    std::size_t hi = std::min(T - 1, t + half);
    double count = static_cast<double>(hi - lo + 1);
    for (std::size_t c = 0; c < series.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t u = lo; u <= hi; ++u) sum += series(u, c);
      out(t, c) = sum / count;
    }
  }
  return out;
}

Matrix euclidean_norms(const Matrix& series, std::size_t group_width) {
  if (group_width == 0 || series.cols() % group_width != 0)
    throw validation_error("column count is not a multiple of the group width");
  std::size_t groups = series.cols() / group_width;
  Matrix out(series.rows(), groups);
  for (std::size_t t = 0; t < series.rows(); ++t)
    for (std::size_t g = 0; g < groups; ++g) {
      double sum = 0.0;
      for (std::size_t d = 0; d < group_width; ++d) {
        double v = series(t, g * group_width + d);
        sum += v * v;
      }
      out(t, g) = std::sqrt(sum);
    }
  return out;
}

Matrix center_of_mass(const MotionRecord& record) {
  if (record.segments.empty())
    throw validation_error("center of mass needs segment data");
  std::size_t T = record.length();
  Matrix com(T, 3);
  for (std::size_t t = 0; t < T; ++t) {
    double total = 0.0;
    for (const auto& seg : record.segments) {
      const SegmentFrame& sf = seg.frames[t];
      total += sf.mass;
      for (int d = 0; d < 3; ++d)
        com(t, d) += sf.mass * sf.com[static_cast<std::size_t>(d)];
    }
    if (!(total > 0.0)) throw validation_error("total segment mass is zero");
    for (int d = 0; d < 3; ++d) com(t, d) /= total;
  }
  return com;
}

Matrix angular_momentum(const MotionRecord& record, const Matrix& com,
                        const Matrix& com_velocity) {
  if (record.segments.empty())
    throw validation_error("angular momentum needs segment data");
  std::size_t T = record.length();
  Matrix L(T, 3);
  for (std::size_t t = 0; t < T; ++t) {
    for (const auto& seg : record.segments) {
      const SegmentFrame& sf = seg.frames[t];
      double r[3], v[3];
      for (int d = 0; d < 3; ++d) {
        r[d] = sf.com[static_cast<std::size_t>(d)] - com(t, d);
        v[d] = sf.com_velocity[static_cast<std::size_t>(d)] - com_velocity(t, d);
      }
      L(t, 0) += sf.mass * (r[1] * v[2] - r[2] * v[1]);
      L(t, 1) += sf.mass * (r[2] * v[0] - r[0] * v[2]);
      L(t, 2) += sf.mass * (r[0] * v[1] - r[1] * v[0]);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          L(t, i) += sf.inertia[static_cast<std::size_t>(3 * i + j)] *
                     sf.angular_velocity[static_cast<std::size_t>(j)];
    }
  }
  return L;
}

ScalerParams fit_scaler(const std::vector<ObservationSequence>& sequences) {
  if (sequences.empty()) throw validation_error("scaler needs training sequences");
  std::size_t dim = sequences.front().dim();
  ScalerParams params;
  params.ranges.assign(dim, {std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()});
  for (const auto& seq : sequences) {
    if (seq.dim() != dim)
      throw validation_error("scaler training sequences disagree on dimension");
    for (std::size_t t = 0; t < seq.length(); ++t)
      for (std::size_t d = 0; d < dim; ++d) {
        double v = seq.frames(t, d);
        params.ranges[d][0] = std::min(params.ranges[d][0], v);
        params.ranges[d][1] = std::max(params.ranges[d][1], v);
      }
  }
  return params;
}

void scale_in_place(ObservationSequence& sequence, const ScalerParams& scaler) {
  if (sequence.dim() != scaler.ranges.size())
    throw validation_error("scaler dimension does not match the sequence");
  for (std::size_t d = 0; d < scaler.ranges.size(); ++d) {
    double lo = scaler.ranges[d][0], hi = scaler.ranges[d][1];
    double span = hi - lo;
    for (std::size_t t = 0; t < sequence.length(); ++t) {
      double& v = sequence.frames(t, d);
      v = span > 0.0 ? 2.0 * (v - lo) / span - 1.0 : 0.0;
    }
  }
}

const std::vector<std::string>& feature_catalog() {
  static const std::vector<std::string> names = {
      "joint_pos",
      "joint_vel",
      "joint_vel_norm",
      "joint_acc",
      "joint_acc_norm",
      "root_pos",
      "root_vel",
      "root_vel_norm",
      "root_acc",
      "root_acc_norm",
      "root_rot",
      "root_rot_norm",
      "extremities_pos",
      "extremities_vel",
      "extremities_vel_norm",
      "extremities_acc",
      "extremities_acc_norm",
      "com_pos",
      "com_vel",
      "com_vel_norm",
      "com_acc",
      "com_acc_norm",
      "angular_momentum",
      "angular_momentum_norm",
      "marker_pos",
      "marker_vel",
      "marker_vel_norm",
      "marker_acc",
      "marker_acc_norm",
  };
  return names;
}

namespace {

// The raw channel a feature family is computed from, or "" for the segment
// derived families.
std::string source_channel(const std::string& feature) {
  if (feature.rfind("joint_", 0) == 0) return "joint_pos";
  if (feature.rfind("root_rot", 0) == 0) return "root_rot";
  if (feature.rfind("root_", 0) == 0) return "root_pos";
  if (feature.rfind("extremities_", 0) == 0) return "extremities_pos";
  if (feature.rfind("marker_", 0) == 0) return "marker_pos";
  return "";  // com_* / angular_momentum*: derived from segments
}

bool known_feature(const std::string& feature) {
  const auto& cat = feature_catalog();
  return std::find(cat.begin(), cat.end(), feature) != cat.end();
}

bool is_norm_feature(const std::string& feature) {
  return feature.size() > 5 && feature.compare(feature.size() - 5, 5, "_norm") == 0;
}

}  // namespace

std::size_t feature_dimension(const MotionRecord& record, const std::string& feature) {
  if (!known_feature(feature))
    throw validation_error("unknown feature '" + feature + "'");
  std::string channel = source_channel(feature);
  if (is_norm_feature(feature)) {
    // per-group norms for extremities (hand/foot), scalars elsewhere
    if (feature.rfind("extremities_", 0) == 0)
      return record.channel_width(channel) / 3;
    return 1;
  }
  if (channel.empty()) return 3;  // com_* and angular_momentum
  return record.channel_width(channel);
}

std::size_t spec_dimension(const MotionRecord& record, const FeatureSpec& spec) {
  std::size_t total = 0;
  for (const auto& f : spec.features) total += feature_dimension(record, f);
  return total;
}

namespace {

// Lazily computed intermediate signals shared by the feature blocks.
struct PipelineState {
  const MotionRecord& record;
  bool normalized;
  double dt;
  std::map<std::string, Matrix> cache;

  PipelineState(const MotionRecord& rec, bool norm, double step)
      : record(rec), normalized(norm), dt(step) {}

  Matrix channel(const std::string& name) {
    std::size_t off = record.channel_offset(name);
    std::size_t width = record.channel_width(name);
    Matrix out(record.length(), width);
    for (std::size_t t = 0; t < record.length(); ++t)
      for (std::size_t c = 0; c < width; ++c) out(t, c) = record.frames(t, off + c);
    return out;
  }

  const Matrix& get(const std::string& key) {
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Matrix value = compute(key);
    return cache.emplace(key, std::move(value)).first->second;
  }

  Matrix compute(const std::string& key) {
    if (key == "joints") return channel("joint_pos");
    if (key == "root_pos") {
      Matrix raw = channel("root_pos");
      if (!normalized) return raw;
      return transform_points(transform(), raw);
    }
    if (key == "root_rot") {
      Matrix raw = channel("root_rot");
      if (!normalized) return raw;
      Matrix un = unwrap_angles(raw);
      for (std::size_t t = un.rows(); t-- > 0;)
        for (int d = 0; d < 3; ++d) un(t, d) -= un(0, d);
      return un;
    }
    if (key == "extremities") {
      Matrix raw = channel("extremities_pos");
      if (!normalized) return raw;
      return transform_points(transform(), raw);
    }
    if (key == "markers") {
      Matrix raw = channel("marker_pos");
      if (!normalized) return raw;
      return transform_points(transform(), raw);
    }
    if (key == "com") {
      Matrix raw = center_of_mass(record);
      if (!normalized) return raw;
      return transform_points(transform(), raw);
    }
    if (key == "angular_momentum") {
      // moments are taken about the body's own center of mass, so compute
      // them in the raw frame and rotate the resulting vector
      Matrix com_raw = center_of_mass(record);
      Matrix com_vel_raw = derivative(com_raw, dt);
      Matrix L = motionhmm::angular_momentum(record, com_raw, com_vel_raw);
      if (!normalized) return L;
      return transform_vectors(transform(), L);
    }
    throw validation_error("internal: unknown signal '" + key + "'");
  }

  const RootTransform& transform() {
    if (!tf_) {
      Matrix pos = channel("root_pos");
      Matrix rot = channel("root_rot");
      tf_ = root_frame_transform(pos, rot);
    }
    return *tf_;
  }

 private:
  std::optional<RootTransform> tf_;
};

Matrix feature_block(PipelineState& state, const std::string& feature) {
  const double dt = state.dt;
  auto vel = [&](const std::string& base) { return derivative(state.get(base), dt); };
  auto acc = [&](const std::string& base) {
    return derivative(derivative(state.get(base), dt), dt);
  };

  if (feature == "joint_pos") return state.get("joints");
  if (feature == "joint_vel") return vel("joints");
  if (feature == "joint_vel_norm")
    return euclidean_norms(vel("joints"), state.get("joints").cols());
  if (feature == "joint_acc") return acc("joints");
  if (feature == "joint_acc_norm")
    return euclidean_norms(acc("joints"), state.get("joints").cols());

  if (feature == "root_pos") return state.get("root_pos");
  if (feature == "root_vel") return vel("root_pos");
  if (feature == "root_vel_norm") return euclidean_norms(vel("root_pos"), 3);
  if (feature == "root_acc") return acc("root_pos");
  if (feature == "root_acc_norm") return euclidean_norms(acc("root_pos"), 3);
  if (feature == "root_rot") return state.get("root_rot");
  if (feature == "root_rot_norm") return euclidean_norms(state.get("root_rot"), 3);

  if (feature == "extremities_pos") return state.get("extremities");
  if (feature == "extremities_vel") return vel("extremities");
  if (feature == "extremities_vel_norm")
    return euclidean_norms(vel("extremities"), 3);
  if (feature == "extremities_acc") return acc("extremities");
  if (feature == "extremities_acc_norm")
    return euclidean_norms(acc("extremities"), 3);

  if (feature == "com_pos") return state.get("com");
  if (feature == "com_vel") return vel("com");
  if (feature == "com_vel_norm") return euclidean_norms(vel("com"), 3);
  if (feature == "com_acc") return acc("com");
  if (feature == "com_acc_norm") return euclidean_norms(acc("com"), 3);

  if (feature == "angular_momentum") return state.get("angular_momentum");
  if (feature == "angular_momentum_norm")
    return euclidean_norms(state.get("angular_momentum"), 3);

  if (feature == "marker_pos") return state.get("markers");
  if (feature == "marker_vel") return vel("markers");
  if (feature == "marker_vel_norm")
    return euclidean_norms(vel("markers"), state.get("markers").cols());
  if (feature == "marker_acc") return acc("markers");
  if (feature == "marker_acc_norm")
    return euclidean_norms(acc("markers"), state.get("markers").cols());

  throw validation_error("unknown feature '" + feature + "'");
}

}  // namespace

ObservationSequence build_observation(const MotionRecord& record,
                                      const FeatureSpec& spec,
                                      const ScalerParams* scaler) {
  if (spec.features.empty())
    throw validation_error("the feature spec selects no features");
  for (const auto& f : spec.features)
    if (!known_feature(f)) throw validation_error("unknown feature '" + f + "'");

  PipelineState state(record, spec.normalized, record.dt());

  std::vector<Matrix> blocks;
  std::size_t total = 0;
  for (const auto& f : spec.features) {
    Matrix block = feature_block(state, f);
    if (spec.smoothed) block = smooth(block, spec.window);
    total += block.cols();
    blocks.push_back(std::move(block));
  }

  ObservationSequence obs;
  obs.dt = record.dt();
  obs.frames = Matrix(record.length(), total);
  std::size_t offset = 0;
  for (const auto& block : blocks) {
    for (std::size_t t = 0; t < block.rows(); ++t)
      for (std::size_t c = 0; c < block.cols(); ++c)
        obs.frames(t, offset + c) = block(t, c);
    offset += block.cols();
  }

  if (spec.scaled && scaler != nullptr) scale_in_place(obs, *scaler);
  return obs;
}

std::string feature_spec_to_json(const FeatureSpec& spec) {
  nlohmann::json doc;
  doc["features"] = spec.features;
  doc["normalized"] = spec.normalized;
  doc["smoothed"] = spec.smoothed;
  doc["window"] = spec.window;
  doc["scaled"] = spec.scaled;
  return doc.dump();
}

FeatureSpec feature_spec_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad feature spec JSON: ") + e.what());
  }
  FeatureSpec spec;
  spec.features = doc.at("features").get<std::vector<std::string>>();
  spec.normalized = doc.at("normalized").get<bool>();
  spec.smoothed = doc.at("smoothed").get<bool>();
  spec.window = doc.at("window").get<std::size_t>();
  spec.scaled = doc.at("scaled").get<bool>();
  return spec;
}

std::string scaler_to_json(const ScalerParams& scaler) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& range : scaler.ranges) doc.push_back({range[0], range[1]});
  return doc.dump();
}

ScalerParams scaler_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad scaler JSON: ") + e.what());
  }
  ScalerParams scaler;
  for (const auto& range : doc)
    scaler.ranges.push_back({range.at(0).get<double>(), range.at(1).get<double>()});
  return scaler;
}

}  // namespace motionhmm
