#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steelseg/mask.hpp"

namespace steelseg {

// Run-length annotation over an H x W image in *column-major* pixel order:
// pixel 1 is the top-left corner, pixel 2 the one below it, and so on down
// the first column before moving right. Starts are 1-based. This matches the
// EncodedPixels text form "start1 len1 start2 len2 ..." bit-exactly.
struct RlePayload {
  struct Run {
    int64_t start = 0;   // 1-based pixel index
    int64_t length = 0;  // > 0
    bool operator==(const Run&) const = default;
  };
  std::vector<Run> runs;

  int64_t total_pixels() const;
  bool operator==(const RlePayload&) const = default;
};

// Parse the space-separated "start len start len ..." text form.
// Throws DataError on odd token counts or non-positive values.
RlePayload parse_rle(const std::string& text);
std::string format_rle(const RlePayload& payload);

// Throws ValidationError if runs are unsorted/overlapping, DataError if a run
// exceeds height * width.
void validate_rle(const RlePayload& payload, int height, int width);

BinaryMask rle_decode(const RlePayload& payload, int height, int width);

// Canonical encoding: maximal runs, sorted, non-overlapping.
RlePayload rle_encode(const BinaryMask& mask);

}  // namespace steelseg
