#include "steelseg/rle.hpp"

#include <sstream>

#include "steelseg/errors.hpp"

namespace steelseg {

int64_t RlePayload::total_pixels() const {
  int64_t sum = 0;
  for (const Run& r : runs) sum += r.length;
  return sum;
}

RlePayload parse_rle(const std::string& text) {
  RlePayload out;
  std::istringstream is(text);
  int64_t start, length;
  while (is >> start) {
    if (!(is >> length)) throw DataError("RLE text has an odd number of integers: '" + text + "'");
    if (start < 1) throw DataError("RLE start must be >= 1, got " + std::to_string(start));
    if (length < 1) throw DataError("RLE length must be >= 1, got " + std::to_string(length));
    out.runs.push_back({start, length});
  }
  if (!is.eof()) throw DataError("RLE text has non-integer tokens: '" + text + "'");
  return out;
}

std::string format_rle(const RlePayload& payload) {
  std::ostringstream os;
  for (size_t i = 0; i < payload.runs.size(); ++i) {
    if (i) os << ' ';
    os << payload.runs[i].start << ' ' << payload.runs[i].length;
  }
  return os.str();
}

void validate_rle(const RlePayload& payload, int height, int width) {
  const int64_t total = static_cast<int64_t>(height) * width;
  int64_t prev_end = 0;  // exclusive end of the previous run
  for (const auto& run : payload.runs) {
    if (run.start <= prev_end)
      throw ValidationError("RLE runs unsorted or overlapping at start " +
                            std::to_string(run.start));
    prev_end = run.start + run.length - 1;
    if (prev_end > total)
      throw DataError("RLE run [" + std::to_string(run.start) + ", +" +
                      std::to_string(run.length) + "] exceeds " + std::to_string(height) + "x" +
                      std::to_string(width) + " = " + std::to_string(total) + " pixels");
  }
}

BinaryMask rle_decode(const RlePayload& payload, int height, int width) {
  if (height <= 0 || width <= 0) throw ValidationError("rle_decode: non-positive dims");
  validate_rle(payload, height, width);
  BinaryMask mask(height, width);
  for (const auto& run : payload.runs) {
    for (int64_t p = run.start - 1; p < run.start - 1 + run.length; ++p) {
      // Column-major: pixel p (0-based) sits at row p % H, column p / H.
      int64_t r = p % height;
      int64_t c = p / height;
      mask.at(static_cast<int>(r), static_cast<int>(c)) = 1;
    }
  }
  return mask;
}

RlePayload rle_encode(const BinaryMask& mask) {
  RlePayload out;
  const int64_t total = static_cast<int64_t>(mask.height) * mask.width;
  int64_t run_start = -1;
  for (int64_t p = 0; p < total; ++p) {
    int64_t r = p % mask.height;
    int64_t c = p / mask.height;
    bool on = mask.at(static_cast<int>(r), static_cast<int>(c)) != 0;
    if (on && run_start < 0) run_start = p;
    if (!on && run_start >= 0) {
      out.runs.push_back({run_start + 1, p - run_start});
      run_start = -1;
    }
  }
  if (run_start >= 0) out.runs.push_back({run_start + 1, total - run_start});
  return out;
}

}  // namespace steelseg
