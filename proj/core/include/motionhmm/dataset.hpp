#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motionhmm/matrix.hpp"

namespace motionhmm {

// One named block of columns in a motion file, e.g. root_pos (width 3) or
// joint_pos (one column per joint angle).
struct Channel {
  std::string name;
  std::size_t width = 0;
};

// Per-frame rigid body data for one body segment, used for center-of-mass
// and angular-momentum features.
struct SegmentFrame {
  double mass = 0.0;
  std::array<double, 3> com{};
  std::array<double, 3> com_velocity{};
  std::array<double, 9> inertia{};  // 3x3 tensor, row-major, symmetric
  std::array<double, 3> angular_velocity{};
};

struct SegmentTrack {
  std::string name;
  std::vector<SegmentFrame> frames;
};

// A motion recording: T frames of raw channels at a fixed sample rate, plus
// an optional per-segment rigid body block.
struct MotionRecord {
  std::vector<Channel> channels;  // raw motion channels only
  Matrix frames;                  // T x sum(channel widths)
  double sample_rate_hz = 0.0;
  std::vector<SegmentTrack> segments;

  std::size_t length() const { return frames.rows(); }
  double dt() const { return 1.0 / sample_rate_hz; }
  bool has_channel(const std::string& name) const;
  // Column offset of a named channel; throws validation_error if absent.
  std::size_t channel_offset(const std::string& name) const;
  std::size_t channel_width(const std::string& name) const;
};

// Label membership bits aligned with a Dataset's vocabulary.
using LabelVector = std::vector<std::uint8_t>;

struct MotionSample {
  std::string id;
  std::vector<std::string> label_names;
  MotionRecord record;
};

struct Dataset {
  std::vector<MotionSample> samples;
  std::vector<std::string> vocabulary;  // sorted union of all label names
  std::vector<LabelVector> labels;      // per sample, aligned to vocabulary

  std::size_t size() const { return samples.size(); }
  // Recomputes vocabulary and label bits from samples[i].label_names.
  void rebuild_labels();
};

// Parses one motion file (CSV with a two-line channel header and leading
// '#'-metadata). `origin` names the source in error messages.
MotionRecord parse_motion_csv(const std::string& text, const std::string& origin);

// Canonical text form of a record: metadata, header, then frames with every
// number in shortest round-trip decimal. Parsing and re-emitting a canonical
// file reproduces it byte for byte.
std::string motion_to_csv(const MotionRecord& record);

// Loads a dataset from a JSON manifest (array of {id, file, labels}) or from
// an exported archive; the two are distinguished by their top-level JSON
// shape. Relative file paths resolve against the manifest's directory.
// Validation runs as part of loading.
Dataset load_dataset(const std::string& path);

// Structural checks: consistent channel schema across samples, finite frame
// values, known channel names with legal widths, positive sample rate,
// non-empty labels, unique ids, sane segment blocks. Throws
// validation_error describing the first offending sample/channel.
void validate_dataset(const Dataset& dataset);

// Deterministic in-place permutation of the sample order (Fisher-Yates under
// the library PRNG). Label rows follow their samples.
void shuffle_dataset(Dataset& dataset, std::uint64_t seed);

struct DatasetReport {
  std::size_t sample_count = 0;
  // (label, #samples carrying it), sorted by count descending then name.
  std::vector<std::pair<std::string, std::size_t>> label_counts;
  // (label combination, #samples), same ordering; combination is the sorted
  // list of label names.
  std::vector<std::pair<std::vector<std::string>, std::size_t>> combination_counts;
};

DatasetReport make_report(const Dataset& dataset);
std::string report_text(const DatasetReport& report);
std::string report_csv(const DatasetReport& report);

// Single-file JSON archive with every motion embedded as canonical CSV.
std::string export_archive(const Dataset& dataset);
Dataset import_archive(const std::string& text);

}  // namespace motionhmm
