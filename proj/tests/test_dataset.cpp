#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "steelseg/dataset.hpp"
#include "steelseg/errors.hpp"

using namespace steelseg;
namespace fs = std::filesystem;

namespace {

void write_blank_image(const fs::path& path, int h = 16, int w = 16) {
  ImageU8 img(h, w);
  REQUIRE(save_image(img, path.string()));
}

// Column-major RLE for an axis-aligned rectangle; rows [r0, r1), cols [c0, c1).
std::string rect_rle(int img_h, int r0, int r1, int c0, int c1) {
  std::string out;
  for (int c = c0; c < c1; ++c) {
    if (!out.empty()) out += ' ';
    out += std::to_string(c * img_h + r0 + 1) + ' ' + std::to_string(r1 - r0);
  }
  return out;
}

bool has_issue_containing(const std::vector<LoadIssue>& issues, const std::string& needle) {
  for (const auto& i : issues)
    if (i.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("load_annotations joins the modern csv schema against the directory") {
  const fs::path root = fixtures::fresh_dir("load_modern");
  fs::create_directories(root / "imgs");
  write_blank_image(root / "imgs" / "b.png");
  write_blank_image(root / "imgs" / "a.png");
  write_blank_image(root / "imgs" / "c.png");
  fs::copy_file(root / "imgs" / "a.png", root / "imgs" / "notes.txt");  // ignored: not an image

  std::ofstream csv(root / "ann.csv");
  csv << "ImageId,ClassId,EncodedPixels\n";
  csv << "a.png,1,1 4\n";
  csv << "a.png,3,33 2\n";
  csv << "b.png,2,\n";  // explicit no-defect row
  csv.close();

  auto index = load_annotations((root / "ann.csv").string(), (root / "imgs").string());
  REQUIRE(index.records.size() == 3);  // sorted directory listing defines the order
  CHECK(index.records[0].image_id == "a.png");
  CHECK(index.records[1].image_id == "b.png");
  CHECK(index.records[2].image_id == "c.png");
  CHECK(index.issues.empty());

  CHECK(index.records[0].rle_by_class.size() == 2);
  CHECK(index.records[0].rle_by_class.at(1) == "1 4");
  CHECK(index.records[0].rle_by_class.at(3) == "33 2");
  CHECK(index.records[1].rle_by_class.empty());
  CHECK(index.records[2].rle_by_class.empty());
}

TEST_CASE("load_annotations accepts the legacy ImageId_ClassId schema") {
  const fs::path root = fixtures::fresh_dir("load_legacy");
  fs::create_directories(root / "imgs");
  write_blank_image(root / "imgs" / "x.jpg");

  std::ofstream csv(root / "ann.csv");
  csv << "ImageId_ClassId,EncodedPixels\n";
  csv << "x.jpg_2,5 3\n";
  csv << "x.jpg_4,\n";
  csv.close();

  auto index = load_annotations((root / "ann.csv").string(), (root / "imgs").string());
  REQUIRE(index.records.size() == 1);
  CHECK(index.issues.empty());
  CHECK(index.records[0].rle_by_class.size() == 1);
  CHECK(index.records[0].rle_by_class.at(2) == "5 3");
}

TEST_CASE("load_annotations collects malformed rows as issues instead of failing") {
  const fs::path root = fixtures::fresh_dir("load_issues");
  fs::create_directories(root / "imgs");
  write_blank_image(root / "imgs" / "a.png");

  std::ofstream csv(root / "ann.csv");
  csv << "a.png,7,1 4\n";          // class out of range
  csv << "ghost.png,1,1 4\n";      // image file absent
  csv << "a.png,2,3 0\n";          // zero-length run
  csv << "a.png,1,1 4\n";
  csv << "a.png,1,9 2\n";          // duplicate class for the same image
  csv << "lonely\n";               // not enough columns
  csv.close();

  auto index = load_annotations((root / "ann.csv").string(), (root / "imgs").string());
  REQUIRE(index.records.size() == 1);
  CHECK(index.records[0].rle_by_class.size() == 1);  // only the first clean class-1 row
  CHECK(index.records[0].rle_by_class.at(1) == "1 4");
  CHECK(index.issues.size() == 5);
  CHECK(has_issue_containing(index.issues, "bad class id"));
  CHECK(has_issue_containing(index.issues, "missing from"));
  CHECK(has_issue_containing(index.issues, "duplicate annotation"));
  CHECK(has_issue_containing(index.issues, "expected 2 or 3 columns"));
}

TEST_CASE("load_annotations requires the inputs to exist") {
  const fs::path root = fixtures::fresh_dir("load_missing");
  fs::create_directories(root / "imgs");
  CHECK_THROWS_AS(load_annotations((root / "nope.csv").string(), (root / "imgs").string()),
                  DataError);
  std::ofstream(root / "ann.csv") << "";
  CHECK_THROWS_AS(load_annotations((root / "ann.csv").string(), (root / "gone").string()),
                  DataError);
}

namespace {

DatasetIndex dummy_index(int n) {
  DatasetIndex index;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "i%05d.png", i);
    index.records.push_back({buf, buf, {}});
  }
  return index;
}

size_t split_size(const DatasetIndex& index, Split s) { return index.split_indices(s).size(); }

}  // namespace

TEST_CASE("split sizes: eval and test round to nearest, train takes the rest") {
  auto ten = split_dataset(dummy_index(10), {0.8, 0.1, 0.1}, 3);
  CHECK(split_size(ten, Split::kTrain) == 8);
  CHECK(split_size(ten, Split::kEval) == 1);
  CHECK(split_size(ten, Split::kTest) == 1);

  // llround(12568 * 0.1) = 1257, so train = 12568 - 2*1257 = 10054.
  auto big = split_dataset(dummy_index(12568), {0.8, 0.1, 0.1}, 3);
  CHECK(split_size(big, Split::kTrain) == 10054);
  CHECK(split_size(big, Split::kEval) == 1257);
  CHECK(split_size(big, Split::kTest) == 1257);
}

TEST_CASE("split is a deterministic partition keyed by the seed") {
  auto base = dummy_index(20);
  auto a = split_dataset(base, {0.6, 0.2, 0.2}, 7);
  auto b = split_dataset(base, {0.6, 0.2, 0.2}, 7);
  auto c = split_dataset(base, {0.6, 0.2, 0.2}, 8);

  CHECK(a.split_assignment == b.split_assignment);
  CHECK(a.split_assignment != c.split_assignment);
  CHECK(a.split_seed == 7);

  // every id lands in exactly one split
  size_t total = 0;
  for (Split s : {Split::kTrain, Split::kEval, Split::kTest}) total += split_size(a, s);
  CHECK(total == 20);
  CHECK(a.split_assignment.size() == 20);
}

TEST_CASE("split rejects bad ratio vectors") {
  auto base = dummy_index(10);
  CHECK_THROWS_AS(split_dataset(base, {0.5, 0.2, 0.2}, 1), ValidationError);
  CHECK_THROWS_AS(split_dataset(base, {1.4, -0.2, -0.2}, 1), ValidationError);
}

TEST_CASE("an unsplit index exposes all records through the train slot") {
  auto base = dummy_index(5);
  CHECK(split_size(base, Split::kTrain) == 5);
  CHECK(split_size(base, Split::kEval) == 0);
}

TEST_CASE("region counting agrees with a union-find oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_int(12));
    const int w = 1 + static_cast<int>(rng.uniform_int(12));
    auto mask = fixtures::random_binary_mask(h, w, rng, 0.2 + 0.6 * rng.uniform());
    CHECK(count_regions_4conn(mask) == oracle::count_regions_union_find(mask));
  }
  // diagonal adjacency does not connect
  BinaryMask diag(2, 2);
  diag.at(0, 0) = 1;
  diag.at(1, 1) = 1;
  CHECK(count_regions_4conn(diag) == 2);
}

TEST_CASE("materialize composes the labeled mask and tracks declared classes") {
  const fs::path root = fixtures::fresh_dir("materialize");
  write_blank_image(root / "img.png", 8, 10);

  AnnotationRecord rec;
  rec.image_id = "img.png";
  rec.image_path = (root / "img.png").string();
  rec.rle_by_class[1] = rect_rle(8, 0, 2, 0, 2);  // rows 0-1, cols 0-1
  rec.rle_by_class[3] = rect_rle(8, 1, 3, 1, 3);  // overlaps one pixel at (1,1)

  std::vector<LoadIssue> issues;
  auto sample = materialize(rec, &issues);
  REQUIRE(sample.has_value());
  CHECK(issues.empty());
  CHECK(sample->image_id == "img.png");
  CHECK(sample->defect_classes_present == std::set<int>{1, 3});
  CHECK(sample->mask.at(0, 0) == 1);
  CHECK(sample->mask.at(1, 1) == 3);  // overlap resolved toward the higher class
  CHECK(sample->mask.at(2, 2) == 3);
  CHECK(sample->mask.at(7, 9) == 0);
}

TEST_CASE("materialize reports out-of-bounds runs and unreadable files") {
  const fs::path root = fixtures::fresh_dir("materialize_bad");
  write_blank_image(root / "img.png", 4, 4);

  AnnotationRecord oob{"img.png", (root / "img.png").string(), {{1, "15 5"}}};
  std::vector<LoadIssue> issues;
  CHECK_FALSE(materialize(oob, &issues).has_value());
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].image_id == "img.png");

  std::ofstream(root / "junk.png") << "this is not a png";
  AnnotationRecord junk{"junk.png", (root / "junk.png").string(), {}};
  issues.clear();
  CHECK_FALSE(materialize(junk, &issues).has_value());
  REQUIRE(issues.size() == 1);
  CHECK(has_issue_containing(issues, "unreadable image"));
}

TEST_CASE("compute_stats matches hand-computed counts on a tiny corpus") {
  const fs::path root = fixtures::fresh_dir("stats");
  fs::create_directories(root / "imgs");
  const int h = 12, w = 20;
  write_blank_image(root / "imgs" / "a.png", h, w);
  write_blank_image(root / "imgs" / "b.png", h, w);
  write_blank_image(root / "imgs" / "c.png", h, w);

  // a: class 1 as two disjoint rectangles (3x4 and 2x3); b: class 3 (4x5) and
  // class 4 (3x3); c: clean.
  std::ofstream csv(root / "ann.csv");
  csv << "a.png,1," << rect_rle(h, 0, 3, 0, 4) << ' ' << rect_rle(h, 6, 8, 10, 13) << "\n";
  csv << "b.png,3," << rect_rle(h, 2, 6, 2, 7) << "\n";
  csv << "b.png,4," << rect_rle(h, 8, 11, 15, 18) << "\n";
  csv.close();

  auto index = load_annotations((root / "ann.csv").string(), (root / "imgs").string());
  REQUIRE(index.issues.empty());
  std::vector<LoadIssue> issues;
  auto stats = compute_stats(index, &issues);
  CHECK(issues.empty());

  CHECK(stats.image_count == 3);
  CHECK(stats.images_with_defect == 2);
  CHECK(stats.total_regions == 4);
  CHECK(stats.region_count == std::array<int64_t, 4>{2, 0, 1, 1});
  // areas by hand: class1 = 3*4 + 2*3 = 18, class3 = 4*5 = 20, class4 = 9.
  CHECK(stats.area_pixels == std::array<int64_t, 4>{18, 0, 20, 9});
  CHECK(stats.count_share[0] == doctest::Approx(0.5));
  CHECK(stats.count_share[2] == doctest::Approx(0.25));
  CHECK(stats.area_share[0] == doctest::Approx(18.0 / 47.0));
  CHECK(stats.area_share[3] == doctest::Approx(9.0 / 47.0));
  CHECK(stats.segments_per_image[0] == std::map<int, int64_t>{{2, 1}});
  CHECK(stats.segments_per_image[2] == std::map<int, int64_t>{{1, 1}});

  double count_sum = 0, area_sum = 0;
  for (int k = 0; k < 4; ++k) {
    count_sum += stats.count_share[k];
    area_sum += stats.area_share[k];
  }
  CHECK(count_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(area_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_stats can be restricted to one split") {
  const fs::path root = fixtures::fresh_dir("stats_split");
  fs::create_directories(root / "imgs");
  write_blank_image(root / "imgs" / "a.png", 8, 8);
  write_blank_image(root / "imgs" / "b.png", 8, 8);
  std::ofstream csv(root / "ann.csv");
  csv << "a.png,1," << rect_rle(8, 0, 2, 0, 2) << "\n";
  csv << "b.png,2," << rect_rle(8, 0, 3, 0, 3) << "\n";
  csv.close();

  auto index = load_annotations((root / "ann.csv").string(), (root / "imgs").string());
  index.split_assignment["a.png"] = Split::kTrain;
  index.split_assignment["b.png"] = Split::kEval;

  auto train_stats = compute_stats(index, nullptr, Split::kTrain);
  CHECK(train_stats.image_count == 1);
  CHECK(train_stats.area_pixels == std::array<int64_t, 4>{4, 0, 0, 0});
  auto eval_stats = compute_stats(index, nullptr, Split::kEval);
  CHECK(eval_stats.area_pixels == std::array<int64_t, 4>{0, 9, 0, 0});
}

TEST_CASE("image_to_tensor applies the normalization constants") {
  ImageU8 img(1, 2);
  img.at(0, 0, 0) = 255;
  img.at(0, 0, 1) = 0;
  img.at(0, 0, 2) = 128;
  auto t = image_to_tensor(img, {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25});
  CHECK(t.at(0, 0, 0, 0) == doctest::Approx((1.0 - 0.5) / 0.25));
  CHECK(t.at(0, 1, 0, 0) == doctest::Approx((0.0 - 0.5) / 0.25));
  CHECK(t.at(0, 2, 0, 0) == doctest::Approx((128.0 / 255.0 - 0.5) / 0.25));
}

TEST_CASE("batch stream covers the split in deterministic order") {
  const fs::path root = fixtures::fresh_dir("stream");
  auto samples = fixtures::write_dataset(root, 7, 24, 32, 11);
  auto index = load_annotations((root / "train.csv").string(), (root / "train_images").string());
  REQUIRE(index.records.size() == 7);

  BatchOptions opt;
  opt.batch_size = 3;
  opt.target_h = 24;
  opt.target_w = 32;

  SUBCASE("ordered mode follows the record order and emits a partial tail") {
    BatchStream stream(index, opt);
    std::vector<std::string> seen;
    std::vector<size_t> batch_sizes;
    while (auto batch = stream.next()) {
      batch_sizes.push_back(batch->masks.size());
      for (auto& id : batch->image_ids) seen.push_back(id);
    }
    CHECK(batch_sizes == std::vector<size_t>{3, 3, 1});
    REQUIRE(seen.size() == 7);
    for (size_t i = 0; i < 7; ++i) CHECK(seen[i] == index.records[i].image_id);
    CHECK(stream.issues().empty());
  }

  SUBCASE("a shuffle seed permutes deterministically") {
    opt.shuffle_seed = 5;
    auto collect = [&] {
      BatchStream stream(index, opt);
      std::vector<std::string> ids;
      while (auto batch = stream.next())
        for (auto& id : batch->image_ids) ids.push_back(id);
      return ids;
    };
    auto first = collect(), second = collect();
    CHECK(first == second);
    std::vector<std::string> sorted = first;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::string> expected;
    for (const auto& r : index.records) expected.push_back(r.image_id);
    CHECK(sorted == expected);

    opt.shuffle_seed = 6;
    CHECK(collect() != first);
  }

  SUBCASE("reset rewinds to the top") {
    BatchStream stream(index, opt);
    auto a = stream.next();
    stream.reset();
    auto b = stream.next();
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->image_ids == b->image_ids);
  }

  SUBCASE("pixels are normalized against the requested constants") {
    opt.mean = {0.0, 0.0, 0.0};
    opt.std = {1.0, 1.0, 1.0};
    BatchStream stream(index, opt);
    auto batch = stream.next();
    REQUIRE(batch);
    // target dims equal source dims, so no resize touches the values
    const auto& src = samples[0].image;
    CHECK(batch->images.at(0, 0, 5, 5) == doctest::Approx(src.at(5, 5, 0) / 255.0));
    CHECK(batch->images.at(0, 2, 10, 20) == doctest::Approx(src.at(10, 20, 2) / 255.0));
    CHECK(batch->masks[0].labels == samples[0].mask.labels);
  }

  SUBCASE("the transform hook sees each sample once with its epoch ordinal") {
    std::vector<uint64_t> ordinals;
    opt.transform = [&](ImageU8& img, LabelMask& mask, uint64_t ordinal) {
      ordinals.push_back(ordinal);
      mask.at(0, 0) = 4;  // visible post-transform edit
    };
    BatchStream stream(index, opt);
    std::vector<LabelMask> masks;
    while (auto batch = stream.next())
      for (auto& m : batch->masks) masks.push_back(std::move(m));
    CHECK(ordinals == std::vector<uint64_t>{0, 1, 2, 3, 4, 5, 6});
    for (const auto& m : masks) CHECK(m.at(0, 0) == 4);
  }

  SUBCASE("set_position resumes exactly where a previous stream stopped") {
    opt.shuffle_seed = 9;
    BatchStream first(index, opt);
    first.next();
    BatchStream resumed(index, opt);
    resumed.set_position(first.cursor(), first.ordinal());
    auto rest_of = [](BatchStream& s) {
      std::vector<std::string> ids;
      while (auto b = s.next())
        for (auto& id : b->image_ids) ids.push_back(id);
      return ids;
    };
    CHECK(rest_of(first) == rest_of(resumed));
  }
}

TEST_CASE("batch stream skips unreadable files and reports them") {
  const fs::path root = fixtures::fresh_dir("stream_bad");
  fixtures::write_dataset(root, 4, 16, 16, 3);
  std::ofstream(root / "train_images" / "img_2.png", std::ios::trunc) << "garbage";

  auto index = load_annotations((root / "train.csv").string(), (root / "train_images").string());
  BatchOptions opt;
  opt.batch_size = 2;
  opt.target_h = 16;
  opt.target_w = 16;
  BatchStream stream(index, opt);

  size_t total = 0;
  while (auto batch = stream.next()) total += batch->masks.size();
  CHECK(total == 3);
  REQUIRE(stream.issues().size() == 1);
  CHECK(stream.issues()[0].image_id == "img_2.png");
}

TEST_CASE("batch stream resizes samples to the target shape") {
  const fs::path root = fixtures::fresh_dir("stream_resize");
  fixtures::write_dataset(root, 1, 20, 30, 2);
  auto index = load_annotations((root / "train.csv").string(), (root / "train_images").string());
  BatchOptions opt;
  opt.batch_size = 1;
  opt.target_h = 10;
  opt.target_w = 15;
  BatchStream stream(index, opt);
  auto batch = stream.next();
  REQUIRE(batch);
  CHECK(batch->images.h() == 10);
  CHECK(batch->images.w() == 15);
  CHECK(batch->masks[0].height == 10);
  CHECK(batch->masks[0].width == 15);
}
