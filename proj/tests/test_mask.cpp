#include "doctest.h"

#include "fixtures.hpp"
#include "steelseg/errors.hpp"
#include "steelseg/mask.hpp"
#include "steelseg/rng.hpp"

using namespace steelseg;

TEST_CASE("class ids outside 1..4 are rejected") {
  CHECK_NOTHROW(ClassId(1));
  CHECK_NOTHROW(ClassId(4));
  CHECK_THROWS_AS(ClassId(0), ValidationError);
  CHECK_THROWS_AS(ClassId(5), ValidationError);
  CHECK_THROWS_AS(ClassId(-1), ValidationError);
}

TEST_CASE("compose stacks layers with highest class winning") {
  BinaryMask a(2, 2), b(2, 2);
  a.at(0, 0) = 1;
  a.at(0, 1) = 1;
  b.at(0, 1) = 1;  // overlaps a at (0,1)
  b.at(1, 1) = 1;

  std::map<ClassId, BinaryMask> layers;
  layers.emplace(ClassId(2), a);
  layers.emplace(ClassId(3), b);
  LabelMask m = compose_label_mask(layers, 2, 2);
  CHECK(m.at(0, 0) == 2);
  CHECK(m.at(0, 1) == 3);  // tie broken towards the higher class
  CHECK(m.at(1, 1) == 3);
  CHECK(m.at(1, 0) == 0);
  CHECK(m.label_set() == std::set<int>{0, 2, 3});
}

TEST_CASE("compose with empty layer map gives all background") {
  LabelMask m = compose_label_mask({}, 3, 5);
  CHECK(m.label_set() == std::set<int>{0});
}

TEST_CASE("compose rejects layers with mismatched dims") {
  std::map<ClassId, BinaryMask> layers;
  layers.emplace(ClassId(1), BinaryMask(2, 3));
  CHECK_THROWS_AS(compose_label_mask(layers, 3, 3), ValidationError);
}

TEST_CASE("class_mask extracts one label") {
  LabelMask m(2, 2);
  m.at(0, 0) = 1;
  m.at(1, 1) = 4;
  BinaryMask c1 = m.class_mask(1);
  CHECK(c1.at(0, 0) == 1);
  CHECK(c1.area() == 1);
  CHECK(m.class_mask(4).at(1, 1) == 1);
  CHECK(m.class_mask(2).area() == 0);
}

TEST_CASE("nearest resize by integer factor duplicates blocks exactly") {
  LabelMask m(2, 2);
  m.at(0, 0) = 1;
  m.at(0, 1) = 2;
  m.at(1, 0) = 3;
  m.at(1, 1) = 4;
  LabelMask big = resize_mask(m, 4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) CHECK(big.at(r, c) == m.at(r / 2, c / 2));
}

TEST_CASE("resize never invents labels and keeps identity") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 2 + static_cast<int>(rng.uniform_int(30));
    const int w = 2 + static_cast<int>(rng.uniform_int(30));
    LabelMask m = fixtures::random_label_mask(h, w, rng);
    CHECK(resize_mask(m, h, w) == m);  // identity

    LabelMask r = resize_mask(m, 1 + static_cast<int>(rng.uniform_int(40)),
                              1 + static_cast<int>(rng.uniform_int(40)));
    auto original = m.label_set();
    for (int label : r.label_set()) CHECK(original.count(label) == 1);
  }
}

TEST_CASE("downscale to 1x1 picks the center-mapped pixel") {
  LabelMask m(3, 3);
  m.at(1, 1) = 3;
  LabelMask tiny = resize_mask(m, 1, 1);
  CHECK(tiny.at(0, 0) == 3);
}
