#include <doctest.h>

#include <Eigen/Dense>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dqsgd/quantizer.hpp"
#include "dqsgd/rng.hpp"
#include "dqsgd/wire.hpp"
#include "test_util.hpp"

using dqsgd::TernaryCodeword;
using dqsgd::TernaryOutput;

namespace {

Eigen::VectorXi levels_of(std::initializer_list<int> values) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (int x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("payload packing: hand-computed bytes") {
    // Five zeros: digits (1,1,1,1,1) = 1 + 3 + 9 + 27 + 81 = 121.
    CHECK(dqsgd::encode(levels_of({0, 0, 0, 0, 0}), 1.0).payload ==
          std::vector<std::uint8_t>{121});
    // Single levels map to their digit value.
    CHECK(dqsgd::encode(levels_of({+1}), 1.0).payload == std::vector<std::uint8_t>{2});
    CHECK(dqsgd::encode(levels_of({0}), 1.0).payload == std::vector<std::uint8_t>{1});
    CHECK(dqsgd::encode(levels_of({-1}), 1.0).payload == std::vector<std::uint8_t>{0});
    // Six elements spill into a second byte whose padding digits stay 0:
    // (+1 x 5) -> 2*(1+3+9+27+81) = 242, then -1 -> digit 0 alone.
    CHECK(dqsgd::encode(levels_of({1, 1, 1, 1, 1, -1}), 1.0).payload ==
          (std::vector<std::uint8_t>{242, 0}));
    CHECK(dqsgd::payload_bytes(1) == 1);
    CHECK(dqsgd::payload_bytes(5) == 1);
    CHECK(dqsgd::payload_bytes(6) == 2);
    CHECK(dqsgd::payload_bytes(100000) == 20000);
  }

  TEST_CASE("frame layout: version, little-endian count, little-endian threshold") {
    const TernaryCodeword cw = dqsgd::encode(levels_of({1, 0, -1}), 2.0);
    const std::vector<std::uint8_t> bytes = dqsgd::to_bytes(cw);
    REQUIRE(bytes.size() == 13 + 1);
    CHECK(bytes[0] == 1);  // version
    CHECK(bytes[1] == 3);  // d = 3, little-endian u32
    CHECK(bytes[2] == 0);
    CHECK(bytes[3] == 0);
    CHECK(bytes[4] == 0);
    // r = 2.0 in IEEE-754 binary64 little-endian: 7 zero bytes then 0x40.
    for (int i = 5; i <= 11; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);
    CHECK(bytes[12] == 0x40);
    // digits (2, 1, 0) -> 2 + 3 - 0 = ... 2*1 + 1*3 + 0*9 = 5.
    CHECK(bytes[13] == 5);
  }

  TEST_CASE("round trip preserves levels and threshold bit for bit") {
    dqsgd::RngStream rng = dqsgd::derive_stream(4, "wire-roundtrip", 0);
    for (int d : {1, 2, 4, 5, 6, 7, 31, 100, 257}) {
      Eigen::VectorXi levels(d);
      for (int i = 0; i < d; ++i) levels(i) = rng.uniform_int(3) - 1;
      const double r = 0.25 + 3.0 * rng.uniform01();

      const TernaryCodeword cw = dqsgd::encode(levels, r);
      const std::vector<std::uint8_t> bytes = dqsgd::to_bytes(cw);
      const TernaryOutput back = dqsgd::decode(dqsgd::from_bytes(bytes));
      CHECK((back.levels.array() == levels.array()).all());
      CHECK(back.r == r);

      // Quantizer output encodes the same way.
      const TernaryOutput direct{levels, r};
      CHECK(dqsgd::to_bytes(dqsgd::encode(direct)) == bytes);
    }
  }

  TEST_CASE("malformed frames are rejected with precise messages") {
    const TernaryCodeword good = dqsgd::encode(levels_of({1, 0, -1, 1, 0, -1}), 1.5);
    const std::vector<std::uint8_t> bytes = dqsgd::to_bytes(good);

    // Truncated frame.
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
    CHECK_THROWS_CONTAINS(dqsgd::from_bytes(cut), std::invalid_argument,
                          "does not match");
    std::vector<std::uint8_t> header_only(bytes.begin(), bytes.begin() + 7);
    CHECK_THROWS_CONTAINS(dqsgd::from_bytes(header_only), std::invalid_argument,
                          "shorter than");

    // Unknown version byte.
    std::vector<std::uint8_t> wrong_version = bytes;
    wrong_version[0] = 2;
    CHECK_THROWS_CONTAINS(dqsgd::from_bytes(wrong_version), std::invalid_argument,
                          "unsupported format version 2");

    // A payload byte above the base-3 maximum 242.
    TernaryCodeword bad_byte = good;
    bad_byte.payload[0] = 243;
    CHECK_THROWS_CONTAINS(dqsgd::decode(bad_byte), std::invalid_argument, "243");

    // Nonzero padding digit: d = 1 but the byte encodes a second digit.
    TernaryCodeword bad_pad;
    bad_pad.d = 1;
    bad_pad.r = 1.0;
    bad_pad.payload = {static_cast<std::uint8_t>(1 + 3)};  // digits (1, 1, 0, 0, 0)
    CHECK_THROWS_CONTAINS(dqsgd::decode(bad_pad), std::invalid_argument,
                          "nonzero padding");

    // Wrong payload size for the declared element count.
    TernaryCodeword bad_size = good;
    bad_size.payload.push_back(0);
    CHECK_THROWS_CONTAINS(dqsgd::decode(bad_size), std::invalid_argument,
                          "payload has 3 bytes; dimension 6 needs 2");

    // Degenerate counts and thresholds never encode.
    CHECK_THROWS_CONTAINS(dqsgd::encode(Eigen::VectorXi(), 1.0), std::invalid_argument,
                          "empty vector");
    CHECK_THROWS_CONTAINS(dqsgd::encode(levels_of({2}), 1.0), std::invalid_argument,
                          "level at index 0 is 2");
    CHECK_THROWS_CONTAINS(dqsgd::encode(levels_of({0}), 0.0), std::invalid_argument,
                          "threshold");
    CHECK_THROWS_CONTAINS(dqsgd::encode(levels_of({0}), -1.0), std::invalid_argument,
                          "threshold");
  }

  TEST_CASE("compression ratio against 32-bit floats") {
    // 32 d / (8 ceil(d/5) + 104), exactly.
    CHECK(dqsgd::compression_ratio(1) == 32.0 / 112.0);
    CHECK(dqsgd::compression_ratio(5) == 160.0 / 112.0);
    CHECK(dqsgd::compression_ratio(10000) == 320000.0 / 16104.0);
    CHECK(dqsgd::compression_ratio(100000) == 3200000.0 / 160104.0);
    // The asymptote is 20x; at d = 100000 the ratio is within half a percent.
    CHECK(dqsgd::compression_ratio(100000) > 19.9);
    CHECK(dqsgd::compression_ratio(100000) < 20.0);
    CHECK_THROWS_CONTAINS(dqsgd::compression_ratio(0), std::invalid_argument,
                          "element count is zero");
  }

  TEST_CASE("stream archives: self-delimiting frames, clean EOF, loud truncation") {
    dqsgd::RngStream rng = dqsgd::derive_stream(5, "wire-stream", 0);
    std::vector<TernaryCodeword> frames;
    std::ostringstream out(std::ios::binary);
    for (int t = 0; t < 3; ++t) {
      Eigen::VectorXi levels(4 + 3 * t);
      for (int i = 0; i < levels.size(); ++i) levels(i) = rng.uniform_int(3) - 1;
      frames.push_back(dqsgd::encode(levels, 1.0 + t));
      dqsgd::write_codeword(out, frames.back());
    }

    std::istringstream in(out.str(), std::ios::binary);
    TernaryCodeword cw;
    for (int t = 0; t < 3; ++t) {
      REQUIRE(dqsgd::read_codeword(in, cw));
      CHECK(cw.d == frames[static_cast<std::size_t>(t)].d);
      CHECK(cw.r == frames[static_cast<std::size_t>(t)].r);
      CHECK(cw.payload == frames[static_cast<std::size_t>(t)].payload);
    }
    CHECK_FALSE(dqsgd::read_codeword(in, cw));  // clean end of archive

    // A partial trailing frame is an error, not an EOF.
    const std::string full = out.str();
    std::istringstream torn(full.substr(0, full.size() - 1), std::ios::binary);
    for (int t = 0; t < 2; ++t) REQUIRE(dqsgd::read_codeword(torn, cw));
    CHECK_THROWS_CONTAINS(dqsgd::read_codeword(torn, cw), std::runtime_error, "truncated");

    std::istringstream torn_header(full.substr(0, 5), std::ios::binary);
    CHECK_THROWS_CONTAINS(dqsgd::read_codeword(torn_header, cw), std::runtime_error,
                          "truncated header");
  }
}
