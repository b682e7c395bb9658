#include "motionhmm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "motionhmm/errors.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/text.hpp"

namespace motionhmm {

namespace {

using nlohmann::json;

constexpr std::size_t kSegmentWidth = 19;  // mass, com, com_vel, inertia, omega
constexpr const char* kSegmentPrefix = "segment:";

bool is_segment_channel(const std::string& name) {
  return name.rfind(kSegmentPrefix, 0) == 0;
}

std::size_t parse_width(std::string_view text, const std::string& origin) {
  std::size_t value = 0;
  auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || value == 0)
    throw validation_error(origin + ": channel width '" + std::string(t) +
                           "' is not a positive integer");
  return value;
}

// The widths a channel may legally have; 0 entries mean "any positive
// multiple of the step". joint_pos and friends depend on the skeleton, the
// rest are fixed by what they represent.
struct ChannelRule {
  std::size_t fixed = 0;  // 0: variable
  std::size_t step = 1;   // variable widths must be a multiple of this
};

const std::map<std::string, ChannelRule>& channel_rules() {
  static const std::map<std::string, ChannelRule> rules = {
      {"root_pos", {3}},  {"root_rot", {3}},        {"joint_pos", {0, 1}},
      {"extremities_pos", {12}}, {"marker_pos", {0, 3}},
  };
  return rules;
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += '+';
    out += labels[i];
  }
  return out;
}

}  // namespace

bool MotionRecord::has_channel(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return true;
  return false;
}

std::size_t MotionRecord::channel_offset(const std::string& name) const {
  std::size_t offset = 0;
  for (const auto& c : channels) {
    if (c.name == name) return offset;
    offset += c.width;
  }
  throw validation_error("no channel named '" + name + "'");
}

std::size_t MotionRecord::channel_width(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return c.width;
  throw validation_error("no channel named '" + name + "'");
}

void Dataset::rebuild_labels() {
  std::set<std::string> names;
  for (const auto& s : samples) names.insert(s.label_names.begin(), s.label_names.end());
  vocabulary.assign(names.begin(), names.end());
  labels.clear();
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    LabelVector bits(vocabulary.size(), 0);
    for (const auto& name : s.label_names) {
      auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), name);
      bits[static_cast<std::size_t>(it - vocabulary.begin())] = 1;
    }
    labels.push_back(std::move(bits));
  }
}

MotionRecord parse_motion_csv(const std::string& text, const std::string& origin) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw validation_error(origin + ": empty motion file");

  MotionRecord record;
  std::size_t cursor = 0;
  bool have_rate = false;
  for (; cursor < lines.size() && !trim(lines[cursor]).empty() &&
         trim(lines[cursor]).front() == '#';
       ++cursor) {
    std::string_view meta = trim(trim(lines[cursor]).substr(1));
    auto eq = meta.find('=');
    if (eq == std::string_view::npos) continue;
    std::string_view key = trim(meta.substr(0, eq));
    std::string_view value = trim(meta.substr(eq + 1));
    if (key == "sample_rate_hz") {
      record.sample_rate_hz = parse_double(value);
      have_rate = true;
    }
  }
  if (!have_rate || !(record.sample_rate_hz > 0.0))
    throw validation_error(origin + ": missing or non-positive sample_rate_hz");
  if (cursor + 2 > lines.size())
    throw validation_error(origin + ": missing channel header");

  std::vector<std::string> names = split(lines[cursor], ',');
  std::vector<std::string> width_fields = split(lines[cursor + 1], ',');
  cursor += 2;
  if (names.size() != width_fields.size())
    throw validation_error(origin + ": channel name / width count mismatch");

  struct Column {
    std::string name;
    std::size_t width;
    std::size_t offset;  // within the full row
  };
  std::vector<Column> columns;
  std::size_t row_width = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    Column col;
    col.name = std::string(trim(names[i]));
    col.width = parse_width(width_fields[i], origin);
    col.offset = row_width;
    row_width += col.width;
    if (is_segment_channel(col.name) && col.width != kSegmentWidth)
      throw validation_error(origin + ": segment channel '" + col.name +
                             "' must have width " + std::to_string(kSegmentWidth));
    columns.push_back(std::move(col));
  }

  std::size_t frame_count = lines.size() - cursor;
  Matrix raw(frame_count, row_width);
  for (std::size_t t = 0; t < frame_count; ++t) {
    std::vector<std::string> fields = split(lines[cursor + t], ',');
    if (fields.size() != row_width)
      throw validation_error(origin + ": frame " + std::to_string(t) + " has " +
                             std::to_string(fields.size()) + " values, expected " +
                             std::to_string(row_width));
    for (std::size_t c = 0; c < row_width; ++c) {
      try {
        raw(t, c) = parse_double(fields[c]);
      } catch (const validation_error& e) {
        throw validation_error(origin + ": frame " + std::to_string(t) + ": " +
                               e.what());
      }
    }
  }

  // Split segment columns off into their own tracks; everything else stays
  // a raw motion channel.
  std::size_t motion_width = 0;
  for (const auto& col : columns)
    if (!is_segment_channel(col.name)) motion_width += col.width;
  record.frames = Matrix(frame_count, motion_width);
  std::size_t out = 0;
  for (const auto& col : columns) {
    if (is_segment_channel(col.name)) {
      SegmentTrack track;
      track.name = col.name.substr(std::string(kSegmentPrefix).size());
      track.frames.resize(frame_count);
      for (std::size_t t = 0; t < frame_count; ++t) {
        SegmentFrame& sf = track.frames[t];
        std::size_t o = col.offset;
        sf.mass = raw(t, o++);
        for (auto& v : sf.com) v = raw(t, o++);
        for (auto& v : sf.com_velocity) v = raw(t, o++);
        for (auto& v : sf.inertia) v = raw(t, o++);
        for (auto& v : sf.angular_velocity) v = raw(t, o++);
      }
      record.segments.push_back(std::move(track));
    } else {
      record.channels.push_back({col.name, col.width});
      for (std::size_t t = 0; t < frame_count; ++t)
        for (std::size_t c = 0; c < col.width; ++c)
          record.frames(t, out + c) = raw(t, col.offset + c);
      out += col.width;
    }
  }
  return record;
}

std::string motion_to_csv(const MotionRecord& record) {
  std::string text = "# sample_rate_hz=" + format_double(record.sample_rate_hz) + "\n";
  std::string names, widths;
  for (const auto& c : record.channels) {
    if (!names.empty()) {
      names += ',';
      widths += ',';
    }
    names += c.name;
    widths += std::to_string(c.width);
  }
  for (const auto& seg : record.segments) {
    if (!names.empty()) {
      names += ',';
      widths += ',';
    }
    names += kSegmentPrefix + seg.name;
    widths += std::to_string(kSegmentWidth);
  }
  text += names + "\n" + widths + "\n";

  for (std::size_t t = 0; t < record.length(); ++t) {
    std::string row;
    for (std::size_t c = 0; c < record.frames.cols(); ++c) {
      if (!row.empty()) row += ',';
      row += format_double(record.frames(t, c));
    }
    for (const auto& seg : record.segments) {
      const SegmentFrame& sf = seg.frames[t];
      auto push = [&](double v) {
        if (!row.empty()) row += ',';
        row += format_double(v);
      };
      push(sf.mass);
      for (double v : sf.com) push(v);
      for (double v : sf.com_velocity) push(v);
      for (double v : sf.inertia) push(v);
      for (double v : sf.angular_velocity) push(v);
    }
    text += row + "\n";
  }
  return text;
}

void validate_dataset(const Dataset& dataset) {
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const MotionSample& s = dataset.samples[i];
    if (s.label_names.empty())
      throw validation_error("motion '" + s.id + "' has no labels");
    if (!seen_ids.insert(s.id).second)
      throw validation_error("duplicate motion id '" + s.id + "'");

    const MotionRecord& r = s.record;
    if (r.length() < 2)
      throw validation_error("motion '" + s.id + "' has fewer than 2 frames");
    if (!(r.sample_rate_hz > 0.0))
      throw validation_error("motion '" + s.id + "' has a non-positive sample rate");

    std::size_t width = 0;
    for (const auto& c : r.channels) {
      auto rule = channel_rules().find(c.name);
      if (rule == channel_rules().end())
        throw validation_error("motion '" + s.id + "': unknown channel '" + c.name +
                               "'");
      const ChannelRule& cr = rule->second;
      if (cr.fixed != 0 && c.width != cr.fixed)
        throw validation_error("motion '" + s.id + "': channel '" + c.name +
                               "' must have width " + std::to_string(cr.fixed) +
                               ", got " + std::to_string(c.width));
      if (cr.fixed == 0 && c.width % cr.step != 0)
        throw validation_error("motion '" + s.id + "': channel '" + c.name +
                               "' width must be a multiple of " +
                               std::to_string(cr.step));
      width += c.width;
    }
    if (width != r.frames.cols())
      throw validation_error("motion '" + s.id +
                             "': frame width does not match the channel widths");
    for (double v : r.frames.values())
      if (!std::isfinite(v))
        throw validation_error("motion '" + s.id + "' contains a non-finite value");

    for (const auto& seg : r.segments) {
      if (seg.frames.size() != r.length())
        throw validation_error("motion '" + s.id + "': segment '" + seg.name +
                               "' frame count differs from the motion");
      for (const auto& sf : seg.frames) {
        if (!(sf.mass > 0.0))
          throw validation_error("motion '" + s.id + "': segment '" + seg.name +
                                 "' has non-positive mass");
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < a; ++b)
            if (std::abs(sf.inertia[static_cast<std::size_t>(3 * a + b)] -
                         sf.inertia[static_cast<std::size_t>(3 * b + a)]) > 1e-9)
              throw validation_error("motion '" + s.id + "': segment '" + seg.name +
                                     "' inertia tensor is not symmetric");
      }
    }
  }

  // identical channel schema across the whole dataset
  if (!dataset.samples.empty()) {
    const auto& first = dataset.samples.front();
    for (const auto& s : dataset.samples) {
      if (s.record.channels.size() == first.record.channels.size()) {
        bool same = true;
        for (std::size_t c = 0; c < s.record.channels.size(); ++c)
          same = same && s.record.channels[c].name == first.record.channels[c].name &&
                 s.record.channels[c].width == first.record.channels[c].width;
        if (same) continue;
      }
      // name the channels present in one sample but not the other
      std::set<std::string> a, b;
      for (const auto& c : first.record.channels) a.insert(c.name);
      for (const auto& c : s.record.channels) b.insert(c.name);
      std::string diff;
      for (const auto& name : a)
        if (!b.count(name)) diff += (diff.empty() ? "" : ", ") + name;
      for (const auto& name : b)
        if (!a.count(name)) diff += (diff.empty() ? "" : ", ") + name;
      if (diff.empty()) diff = "channel widths differ";
      throw validation_error("motion '" + s.id + "' does not share the schema of '" +
                             first.id + "' (" + diff + ")");
    }
  }
}

namespace {

Dataset dataset_from_manifest(const json& manifest, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  Dataset ds;
  fs::path base = fs::path(manifest_path).parent_path();
  for (const auto& entry : manifest) {
    if (!entry.is_object() || !entry.contains("id") || !entry.contains("file") ||
        !entry.contains("labels"))
      throw validation_error("manifest " + manifest_path +
                             ": entries need id, file and labels");
    MotionSample sample;
    sample.id = entry.at("id").get<std::string>();
    for (const auto& label : entry.at("labels"))
      sample.label_names.push_back(label.get<std::string>());
    fs::path file = fs::path(entry.at("file").get<std::string>());
    if (file.is_relative()) file = base / file;
    sample.record = parse_motion_csv(read_text_file(file.string()), file.string());
    ds.samples.push_back(std::move(sample));
  }
  ds.rebuild_labels();
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::string text = read_text_file(path);
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(path + ": not valid JSON (" + e.what() + ")");
  }
  Dataset ds;
  if (parsed.is_array()) {
    ds = dataset_from_manifest(parsed, path);
  } else if (parsed.is_object()) {
    ds = import_archive(text);
  } else {
    throw validation_error(path + ": expected a manifest array or an archive object");
  }
  validate_dataset(ds);
  return ds;
}

void shuffle_dataset(Dataset& dataset, std::uint64_t seed) {
  std::vector<std::size_t> order(dataset.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<MotionSample> samples;
  std::vector<LabelVector> labels;
  samples.reserve(order.size());
  labels.reserve(order.size());
  for (std::size_t i : order) {
    samples.push_back(std::move(dataset.samples[i]));
    labels.push_back(std::move(dataset.labels[i]));
  }
  dataset.samples = std::move(samples);
  dataset.labels = std::move(labels);
}

DatasetReport make_report(const Dataset& dataset) {
  DatasetReport report;
  report.sample_count = dataset.samples.size();

  std::map<std::string, std::size_t> label_counts;
  std::map<std::vector<std::string>, std::size_t> combo_counts;
  for (const auto& s : dataset.samples) {
    std::vector<std::string> combo = s.label_names;
    std::sort(combo.begin(), combo.end());
    combo.erase(std::unique(combo.begin(), combo.end()), combo.end());
    for (const auto& name : combo) ++label_counts[name];
    ++combo_counts[combo];
  }
  report.label_counts.assign(label_counts.begin(), label_counts.end());
  std::stable_sort(report.label_counts.begin(), report.label_counts.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  report.combination_counts.assign(combo_counts.begin(), combo_counts.end());
  std::stable_sort(report.combination_counts.begin(), report.combination_counts.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  return report;
}

std::string report_text(const DatasetReport& report) {
  std::ostringstream out;
  out << "samples: " << report.sample_count << "\n\n";
  out << "labels (" << report.label_counts.size() << "):\n";
  for (const auto& [name, count] : report.label_counts)
    out << "  " << name << ": " << count << "\n";
  out << "\nlabel combinations (" << report.combination_counts.size() << "):\n";
  for (const auto& [combo, count] : report.combination_counts)
    out << "  " << join_labels(combo) << ": " << count << "\n";
  return out.str();
}

std::string report_csv(const DatasetReport& report) {
  std::string out = "kind,name,count\n";
  for (const auto& [name, count] : report.label_counts)
    out += "label," + name + "," + std::to_string(count) + "\n";
  for (const auto& [combo, count] : report.combination_counts)
    out += "combination," + join_labels(combo) + "," + std::to_string(count) + "\n";
  return out;
}

std::string export_archive(const Dataset& dataset) {
  json doc;
  doc["format"] = "motionhmm-archive";
  doc["version"] = 1;
  json samples = json::array();
  for (const auto& s : dataset.samples) {
    json entry;
    entry["id"] = s.id;
    entry["labels"] = s.label_names;
    entry["motion"] = motion_to_csv(s.record);
    samples.push_back(std::move(entry));
  }
  doc["samples"] = std::move(samples);
  return doc.dump(2) + "\n";
}

Dataset import_archive(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("archive is not valid JSON (") + e.what() +
                           ")");
  }
  if (!doc.is_object() || doc.value("format", "") != "motionhmm-archive")
    throw validation_error("not a motion archive");
  Dataset ds;
  for (const auto& entry : doc.at("samples")) {
    MotionSample sample;
    sample.id = entry.at("id").get<std::string>();
    for (const auto& label : entry.at("labels"))
      sample.label_names.push_back(label.get<std::string>());
    sample.record =
        parse_motion_csv(entry.at("motion").get<std::string>(), sample.id);
    ds.samples.push_back(std::move(sample));
  }
  ds.rebuild_labels();
  return ds;
}

}  // namespace motionhmm
