#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "steelseg/image.hpp"
#include "steelseg/mask.hpp"
#include "steelseg/nn/tensor.hpp"

namespace steelseg {

enum class Split { kTrain, kEval, kTest };
std::string to_string(Split s);

// One image plus the raw RLE annotation text per defect class.
struct AnnotationRecord {
  std::string image_id;
  std::string image_path;
  std::map<int, std::string> rle_by_class;  // class id 1..4 -> nonempty RLE text
};

// Fully materialized sample.
struct SampleRecord {
  std::string image_id;
  ImageU8 image;
  LabelMask mask;
  std::set<int> defect_classes_present;
};

struct LoadIssue {
  std::string image_id;
  std::string message;
};

struct DatasetIndex {
  std::vector<AnnotationRecord> records;  // ordered by image id
  std::map<std::string, Split> split_assignment;
  uint64_t split_seed = 0;
  std::vector<LoadIssue> issues;  // collected load problems, never a crash

  std::vector<size_t> split_indices(Split s) const;
};

struct DefectStats {
  std::array<int64_t, 4> region_count{};      // per class 1..4
  std::array<double, 4> count_share{};        // region_count / total regions
  std::array<int64_t, 4> area_pixels{};       // per class
  std::array<double, 4> area_share{};         // area / total defect area
  // per class: segments-per-image -> number of images (images containing the
  // class only)
  std::array<std::map<int, int64_t>, 4> segments_per_image;
  int64_t image_count = 0;
  int64_t images_with_defect = 0;
  int64_t total_regions = 0;
};

// Scans image_directory (sorted filenames define record order) and joins the
// annotation CSV. Accepted CSV schemas: "ImageId,ClassId,EncodedPixels" or
// the legacy "ImageId_ClassId,EncodedPixels"; a header row is optional.
// Malformed rows and CSV ids without an image file land in issues.
DatasetIndex load_annotations(const std::string& csv_path, const std::string& image_directory);

// Deterministic shuffle-and-slice split. Ratios must sum to 1 (+-1e-9);
// eval/test sizes are rounded to nearest, the remainder goes to train.
DatasetIndex split_dataset(const DatasetIndex& index, std::array<double, 3> ratios,
                           uint64_t seed);

// Decode one record: loads the image and composes the labeled mask.
// Returns nullopt (and records an issue) if the image is unreadable or an
// RLE run exceeds the image bounds.
std::optional<SampleRecord> materialize(const AnnotationRecord& record,
                                        std::vector<LoadIssue>* issues);

// Number of 4-connected foreground regions.
int count_regions_4conn(const BinaryMask& mask);

// Region counts, area shares and fragmentation histograms. With only_split
// set, records outside that split are ignored (e.g. derive augmentation
// shares from training data alone).
DefectStats compute_stats(const DatasetIndex& index, std::vector<LoadIssue>* issues = nullptr,
                          std::optional<Split> only_split = std::nullopt);

struct Batch {
  nn::Tensor images;  // B x 3 x target_h x target_w, normalized
  std::vector<LabelMask> masks;
  std::vector<std::string> image_ids;
};

struct BatchOptions {
  Split split = Split::kTrain;
  int batch_size = 16;
  int target_h = 256;
  int target_w = 256;
  // < 0 keeps the index order; otherwise a deterministic shuffle.
  int64_t shuffle_seed = -1;
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
  // Optional hook applied to the raw image/mask pair before the resize;
  // the ordinal is the sample's position in this epoch's iteration order.
  std::function<void(ImageU8&, LabelMask&, uint64_t ordinal)> transform;
};

// Ordered stream of batches over one split; the final partial batch is
// emitted. Unreadable images are skipped and reported through issues().
class BatchStream {
 public:
  BatchStream(const DatasetIndex& index, BatchOptions options);

  std::optional<Batch> next();
  void reset();
  const std::vector<LoadIssue>& issues() const { return issues_; }
  size_t sample_count() const { return order_.size(); }

  // Stream position, exposed so training checkpoints can resume mid-epoch.
  size_t cursor() const { return cursor_; }
  uint64_t ordinal() const { return ordinal_; }
  void set_position(size_t cursor, uint64_t ordinal) {
    cursor_ = cursor;
    ordinal_ = ordinal;
  }

 private:
  const DatasetIndex& index_;
  BatchOptions options_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
  uint64_t ordinal_ = 0;
  std::vector<LoadIssue> issues_;
};

// Normalized image tensor for a single sample (used by inference paths).
nn::Tensor image_to_tensor(const ImageU8& img, const std::array<double, 3>& mean,
                           const std::array<double, 3>& std);

}  // namespace steelseg
