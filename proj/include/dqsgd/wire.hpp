#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dqsgd/quantizer.hpp"

namespace dqsgd {

/// Framed ternary broadcast: a 13-byte header followed by base-3 packed
/// levels.
///   byte 0       format version (currently 1)
///   bytes 1-4    element count d, unsigned 32-bit little-endian
///   bytes 5-12   threshold r, IEEE-754 binary64 little-endian
///   bytes 13..   ceil(d/5) payload bytes, five levels per byte
/// Each payload byte stores five base-3 digits, least significant first,
/// mapping level -1 -> digit 0, 0 -> 1, +1 -> 2.  Digits past d must be 0,
/// so every vector has exactly one encoding and no byte exceeds 242.
struct TernaryCodeword {
  static constexpr std::uint8_t kVersion = 1;
  std::uint32_t d = 0;
  double r = 0.0;
  std::vector<std::uint8_t> payload;
};

/// ceil(d/5): payload bytes needed for d levels.
std::size_t payload_bytes(std::uint32_t d);

TernaryCodeword encode(const Eigen::VectorXi& levels, double r);
TernaryCodeword encode(const TernaryOutput& output);

/// Unpacks the payload back to levels.  Throws std::invalid_argument on any
/// malformed content: wrong payload size, a byte above 242, or nonzero
/// padding digits.
TernaryOutput decode(const TernaryCodeword& codeword);

std::vector<std::uint8_t> to_bytes(const TernaryCodeword& codeword);
TernaryCodeword from_bytes(const std::uint8_t* data, std::size_t size);
TernaryCodeword from_bytes(const std::vector<std::uint8_t>& bytes);

/// Bits of a plain float32 vector over bits of one frame:
///   32 d / (8 ceil(d/5) + 104).
/// Approaches 20 from below as d grows.
double compression_ratio(std::uint32_t d);

/// Frames are self-delimiting (the header gives the payload length), so an
/// archive is a bare concatenation.  read_codeword returns false on clean
/// EOF and throws std::runtime_error on a partial frame.
void write_codeword(std::ostream& out, const TernaryCodeword& codeword);
bool read_codeword(std::istream& in, TernaryCodeword& codeword);

}  // namespace dqsgd
