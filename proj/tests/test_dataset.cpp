#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "motionhmm/dataset.hpp"
#include "motionhmm/errors.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/synth.hpp"
#include "motionhmm/text.hpp"

using namespace motionhmm;
namespace fs = std::filesystem;

namespace {

const char* kTinyCsv =
    "# sample_rate_hz=100\n"
    "root_pos,root_rot\n"
    "3,3\n"
    "0,0,0.9,0,0,0\n"
    "0.5,0.25,0.9,0.1,0,0\n"
    "1,0.5,0.95,0.2,0,0\n";

// Minimal on-disk dataset: writes the given motions and a manifest, returns
// the manifest path.
using Entries = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct TempDataset {
  fs::path dir;
  fs::path manifest;

  TempDataset(const Entries& entries,
              const std::string& csv = kTinyCsv) {
    dir = fs::temp_directory_path() /
          ("mh_test_" + std::to_string(Rng(reinterpret_cast<std::uintptr_t>(this)).next_u64()));
    fs::create_directories(dir);
    std::string manifest_text = "[\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& [id, labels] = entries[i];
      std::string file = id + ".csv";
      write_text_file((dir / file).string(), csv);
      manifest_text += "  {\"id\": \"" + id + "\", \"file\": \"" + file +
                       "\", \"labels\": [";
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j) manifest_text += ", ";
        manifest_text += "\"" + labels[j] + "\"";
      }
      manifest_text += "]}";
      if (i + 1 < entries.size()) manifest_text += ",";
      manifest_text += "\n";
    }
    manifest_text += "]\n";
    manifest = dir / "manifest.json";
    write_text_file(manifest.string(), manifest_text);
  }
  ~TempDataset() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("motion csv parses channels, widths, sample rate and frames") {
  MotionRecord r = parse_motion_csv(kTinyCsv, "tiny");
  REQUIRE(r.channels.size() == 2);
  CHECK(r.channels[0].name == "root_pos");
  CHECK(r.channels[0].width == 3);
  CHECK(r.channels[1].name == "root_rot");
  CHECK(r.sample_rate_hz == 100.0);
  REQUIRE(r.length() == 3);
  CHECK(r.frames(1, 0) == 0.5);
  CHECK(r.frames(2, 3) == 0.2);
  CHECK(r.channel_offset("root_rot") == 3);
  CHECK(r.channel_width("root_rot") == 3);
  CHECK_THROWS_AS(r.channel_offset("nope"), validation_error);
}

TEST_CASE("motion csv round-trips byte-identically once canonical") {
  MotionRecord r = parse_motion_csv(kTinyCsv, "tiny");
  std::string canonical = motion_to_csv(r);
  MotionRecord r2 = parse_motion_csv(canonical, "canonical");
  CHECK(motion_to_csv(r2) == canonical);
  CHECK(r2.frames == r.frames);
  CHECK(r2.sample_rate_hz == r.sample_rate_hz);
}

TEST_CASE("segment blocks survive the csv round trip") {
  MotionRecord r = parse_motion_csv(kTinyCsv, "tiny");
  SegmentTrack torso{"torso", {}};
  for (int t = 0; t < 3; ++t) {
    SegmentFrame sf;
    sf.mass = 30.5;
    sf.com = {0.1 * t, 0.2, 1.0};
    sf.com_velocity = {0.5, 0, 0};
    sf.inertia = {1, 0.1, 0, 0.1, 2, 0, 0, 0, 3};
    sf.angular_velocity = {0, 0, 0.25};
    torso.frames.push_back(sf);
  }
  r.segments = {torso};
  std::string text = motion_to_csv(r);
  MotionRecord back = parse_motion_csv(text, "with-segments");
  REQUIRE(back.segments.size() == 1);
  CHECK(back.segments[0].name == "torso");
  REQUIRE(back.segments[0].frames.size() == 3);
  CHECK(back.segments[0].frames[1].com[0] == 0.1);
  CHECK(back.segments[0].frames[1].inertia[4] == 2.0);
  CHECK(motion_to_csv(back) == text);
}

TEST_CASE("motion csv parse failures name the problem") {
  CHECK_THROWS_AS(parse_motion_csv("root_pos\n3\n1,2\n", "bad"), validation_error);
  CHECK_THROWS_AS(parse_motion_csv("# sample_rate_hz=100\nroot_pos\n3\n1,2\n", "bad"),
                  validation_error);  // row width mismatch
  CHECK_THROWS_AS(parse_motion_csv("# sample_rate_hz=100\nroot_pos\nx\n1,2,3\n", "bad"),
                  validation_error);  // non-numeric width
  CHECK_THROWS_AS(parse_motion_csv("", "empty"), validation_error);
}

TEST_CASE("load_dataset resolves files and builds the sorted vocabulary") {
  TempDataset td(Entries{{"a", {"walk"}}, {"b", {"walk", "run"}}, {"c", {"run", "walk"}}});
  Dataset ds = load_dataset(td.manifest.string());
  REQUIRE(ds.size() == 3);
  CHECK(ds.vocabulary == std::vector<std::string>{"run", "walk"});
  CHECK(ds.labels[0] == LabelVector{0, 1});
  CHECK(ds.labels[1] == LabelVector{1, 1});
  CHECK(ds.labels[2] == LabelVector{1, 1});
  CHECK(ds.samples[0].id == "a");
}

TEST_CASE("missing motion files are an io error naming the path") {
  TempDataset td(Entries{{"a", {"walk"}}});
  fs::remove(td.dir / "a.csv");
  CHECK_THROWS_WITH_AS(load_dataset(td.manifest.string()),
                       doctest::Contains("a.csv"), io_error);
  CHECK_THROWS_AS(load_dataset("/no/such/manifest.json"), io_error);
}

TEST_CASE("validation failures: labels, duplicate ids, schema drift") {
  TempDataset empty_labels(Entries{{"a", {}}});
  CHECK_THROWS_AS(load_dataset(empty_labels.manifest.string()), validation_error);

  TempDataset dup(Entries{{"a", {"x"}}, {"a", {"y"}}});
  CHECK_THROWS_AS(load_dataset(dup.manifest.string()), validation_error);

  TempDataset drift(Entries{{"a", {"x"}}, {"b", {"y"}}});
  // rewrite b with a different channel set
  write_text_file((drift.dir / "b.csv").string(),
                  "# sample_rate_hz=100\nroot_pos\n3\n1,2,3\n4,5,6\n");
  CHECK_THROWS_WITH_AS(load_dataset(drift.manifest.string()),
                       doctest::Contains("root_rot"), validation_error);
}

TEST_CASE("validation rejects unknown channels and non-finite values") {
  TempDataset weird(Entries{{"a", {"x"}}},
                    "# sample_rate_hz=100\nmystery_channel\n2\n1,2\n3,4\n");
  CHECK_THROWS_WITH_AS(load_dataset(weird.manifest.string()),
                       doctest::Contains("mystery_channel"), validation_error);

  TempDataset inf_values(Entries{{"a", {"x"}}},
                         "# sample_rate_hz=100\nroot_pos\n3\n1,inf,3\n4,5,6\n");
  CHECK_THROWS_AS(load_dataset(inf_values.manifest.string()), validation_error);

  TempDataset bad_width(Entries{{"a", {"x"}}},
                        "# sample_rate_hz=100\nroot_pos\n4\n1,2,3,4\n5,6,7,8\n");
  CHECK_THROWS_AS(load_dataset(bad_width.manifest.string()), validation_error);
}

TEST_CASE("shuffle permutes samples deterministically with labels attached") {
  TempDataset td(Entries{{"a", {"x"}}, {"b", {"y"}}, {"c", {"x", "y"}}, {"d", {"y"}},
                  {"e", {"x"}}});
  Dataset d1 = load_dataset(td.manifest.string());
  Dataset d2 = load_dataset(td.manifest.string());
  shuffle_dataset(d1, 33);
  shuffle_dataset(d2, 33);
  std::vector<std::string> order;
  for (const auto& s : d1.samples) order.push_back(s.id);
  std::vector<std::string> order2;
  for (const auto& s : d2.samples) order2.push_back(s.id);
  CHECK(order == order2);
  std::vector<std::string> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::string>{"a", "b", "c", "d", "e"});
  // labels moved with their samples
  for (std::size_t i = 0; i < d1.size(); ++i) {
    if (d1.samples[i].id == "c") CHECK(d1.labels[i] == LabelVector{1, 1});
    if (d1.samples[i].id == "b") CHECK(d1.labels[i] == LabelVector{0, 1});
  }
  Dataset d3 = load_dataset(td.manifest.string());
  shuffle_dataset(d3, 34);
  std::vector<std::string> order3;
  for (const auto& s : d3.samples) order3.push_back(s.id);
  CHECK(order3 != order);
}

TEST_CASE("report counts labels and combinations") {
  TempDataset td(Entries{{"a", {"walk"}}, {"b", {"walk", "run"}}, {"c", {"run", "walk"}}});
  Dataset ds = load_dataset(td.manifest.string());
  DatasetReport rep = make_report(ds);
  CHECK(rep.sample_count == 3);
  REQUIRE(rep.label_counts.size() == 2);
  CHECK(rep.label_counts[0].first == "walk");
  CHECK(rep.label_counts[0].second == 3);
  CHECK(rep.label_counts[1].first == "run");
  CHECK(rep.label_counts[1].second == 2);
  REQUIRE(rep.combination_counts.size() == 2);
  CHECK(rep.combination_counts[0].first == std::vector<std::string>{"run", "walk"});
  CHECK(rep.combination_counts[0].second == 2);
  CHECK(rep.combination_counts[1].first == std::vector<std::string>{"walk"});
  CHECK(rep.combination_counts[1].second == 1);
  // both renderings mention the combination
  CHECK(report_text(rep).find("run+walk") != std::string::npos);
  CHECK(report_csv(rep).find("run+walk") != std::string::npos);
}

TEST_CASE("archive export imports identically and re-exports byte for byte") {
  SynthSpec spec;
  spec.classes = {{{"walk"}}, {{"walk", "fast"}}};
  spec.sequences_per_class = 3;
  spec.frames = 12;
  spec.dim = 6;
  spec.states = 2;
  spec.seed = 5;
  Dataset ds = synth_dataset(spec);
  std::string archive = export_archive(ds);
  Dataset back = import_archive(archive);
  REQUIRE(back.size() == ds.size());
  CHECK(back.vocabulary == ds.vocabulary);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].id == ds.samples[i].id);
    CHECK(back.samples[i].record.frames == ds.samples[i].record.frames);
    CHECK(back.labels[i] == ds.labels[i]);
  }
  CHECK(export_archive(back) == archive);
  // archives also load through the general entry point
  auto dir = fs::temp_directory_path() / "mh_archive_test";
  fs::create_directories(dir);
  write_text_file((dir / "archive.json").string(), archive);
  Dataset loaded = load_dataset((dir / "archive.json").string());
  CHECK(loaded.size() == ds.size());
  fs::remove_all(dir);
}

TEST_CASE("synth datasets are reproducible and labeled as requested") {
  SynthSpec spec;
  spec.classes = {{{"a"}}, {{"b"}}, {{"a", "b"}}};
  spec.sequences_per_class = 4;
  spec.frames = 10;
  spec.dim = 3;
  spec.states = 2;
  spec.seed = 11;
  spec.noise_joint_dims = 2;
  Dataset d1 = synth_dataset(spec);
  Dataset d2 = synth_dataset(spec);
  REQUIRE(d1.size() == 12);
  CHECK(d1.vocabulary == std::vector<std::string>{"a", "b"});
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1.samples[i].record.frames == d2.samples[i].record.frames);
    CHECK(d1.samples[i].record.has_channel("joint_pos"));
    CHECK(d1.samples[i].record.channel_width("joint_pos") == 2);
  }
  CHECK_NOTHROW(validate_dataset(d1));
}
