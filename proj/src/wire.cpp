#include "dqsgd/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dqsgd {

namespace {

constexpr std::size_t kHeaderBytes = 13;
constexpr int kLevelsPerByte = 5;
// 2 * (1 + 3 + 9 + 27 + 81): five digits of 2, the largest canonical byte.
constexpr int kMaxPayloadByte = 242;
constexpr int kPowers[kLevelsPerByte] = {1, 3, 9, 27, 81};

void check_threshold(double r) {
  if (!std::isfinite(r) || r <= 0.0) {
    throw std::invalid_argument("wire: threshold r = " + std::to_string(r) +
                                " must be a positive finite number");
  }
}

void check_dimension(std::uint32_t d) {
  if (d == 0) {
    throw std::invalid_argument("wire: element count is zero");
  }
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64_le(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
  }
}

double get_f64_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

std::size_t payload_bytes(std::uint32_t d) {
  return (static_cast<std::size_t>(d) + kLevelsPerByte - 1) / kLevelsPerByte;
}

TernaryCodeword encode(const Eigen::VectorXi& levels, double r) {
  check_threshold(r);
  if (levels.size() == 0) {
    throw std::invalid_argument("wire: cannot encode an empty vector");
  }
  TernaryCodeword codeword;
  codeword.d = static_cast<std::uint32_t>(levels.size());
  codeword.r = r;
  codeword.payload.assign(payload_bytes(codeword.d), 0);
  for (Eigen::Index e = 0; e < levels.size(); ++e) {
    const int level = levels(e);
    if (level < -1 || level > 1) {
      throw std::invalid_argument("wire: level at index " + std::to_string(e) + " is " +
                                  std::to_string(level) + "; expected -1, 0, or +1");
    }
    const int digit = level + 1;
    codeword.payload[static_cast<std::size_t>(e / kLevelsPerByte)] +=
        static_cast<std::uint8_t>(digit * kPowers[e % kLevelsPerByte]);
  }
  return codeword;
}

TernaryCodeword encode(const TernaryOutput& output) { return encode(output.levels, output.r); }

TernaryOutput decode(const TernaryCodeword& codeword) {
  check_dimension(codeword.d);
  check_threshold(codeword.r);
  const std::size_t expected = payload_bytes(codeword.d);
  if (codeword.payload.size() != expected) {
    throw std::invalid_argument("wire: payload has " + std::to_string(codeword.payload.size()) +
                                " bytes; dimension " + std::to_string(codeword.d) + " needs " +
                                std::to_string(expected));
  }
  TernaryOutput output;
  output.r = codeword.r;
  output.levels.resize(static_cast<Eigen::Index>(codeword.d));
  for (std::size_t b = 0; b < codeword.payload.size(); ++b) {
    const int byte = codeword.payload[b];
    if (byte > kMaxPayloadByte) {
      throw std::invalid_argument("wire: payload byte " + std::to_string(b) + " has value " +
                                  std::to_string(byte) + " > 242");
    }
    int rest = byte;
    for (int pos = 0; pos < kLevelsPerByte; ++pos) {
      const int digit = rest % 3;
      rest /= 3;
      const std::size_t e = b * kLevelsPerByte + static_cast<std::size_t>(pos);
      if (e < codeword.d) {
        output.levels(static_cast<Eigen::Index>(e)) = digit - 1;
      } else if (digit != 0) {
        throw std::invalid_argument("wire: nonzero padding digit in byte " + std::to_string(b) +
                                    " past element " + std::to_string(codeword.d - 1));
      }
    }
  }
  return output;
}

std::vector<std::uint8_t> to_bytes(const TernaryCodeword& codeword) {
  check_dimension(codeword.d);
  check_threshold(codeword.r);
  const std::size_t expected = payload_bytes(codeword.d);
  if (codeword.payload.size() != expected) {
    throw std::invalid_argument("wire: payload has " + std::to_string(codeword.payload.size()) +
                                " bytes; dimension " + std::to_string(codeword.d) + " needs " +
                                std::to_string(expected));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + codeword.payload.size());
  out.push_back(TernaryCodeword::kVersion);
  put_u32_le(out, codeword.d);
  put_f64_le(out, codeword.r);
  out.insert(out.end(), codeword.payload.begin(), codeword.payload.end());
  return out;
}

TernaryCodeword from_bytes(const std::uint8_t* data, std::size_t size) {
  if (size < kHeaderBytes) {
    throw std::invalid_argument("wire: frame of " + std::to_string(size) +
                                " bytes is shorter than the 13-byte header");
  }
  if (data[0] != TernaryCodeword::kVersion) {
    throw std::invalid_argument("wire: unsupported format version " + std::to_string(data[0]) +
                                " (expected 1)");
  }
  TernaryCodeword codeword;
  codeword.d = get_u32_le(data + 1);
  check_dimension(codeword.d);
  codeword.r = get_f64_le(data + 5);
  check_threshold(codeword.r);
  const std::size_t expected = payload_bytes(codeword.d);
  if (size != kHeaderBytes + expected) {
    throw std::invalid_argument("wire: frame size " + std::to_string(size) + " does not match " +
                                std::to_string(kHeaderBytes + expected) + " for dimension " +
                                std::to_string(codeword.d));
  }
  codeword.payload.assign(data + kHeaderBytes, data + size);
  return codeword;
}

TernaryCodeword from_bytes(const std::vector<std::uint8_t>& bytes) {
  return from_bytes(bytes.data(), bytes.size());
}

double compression_ratio(std::uint32_t d) {
  check_dimension(d);
  return 32.0 * static_cast<double>(d) /
         (8.0 * static_cast<double>(payload_bytes(d)) + 8.0 * static_cast<double>(kHeaderBytes));
}

void write_codeword(std::ostream& out, const TernaryCodeword& codeword) {
  const std::vector<std::uint8_t> bytes = to_bytes(codeword);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("wire: stream write failed");
  }
}

bool read_codeword(std::istream& in, TernaryCodeword& codeword) {
  std::uint8_t header[kHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kHeaderBytes);
  const std::streamsize got = in.gcount();
  if (got == 0 && in.eof()) {
    return false;  // clean end of archive
  }
  if (got != static_cast<std::streamsize>(kHeaderBytes)) {
    throw std::runtime_error("wire: truncated header (got " + std::to_string(got) +
                             " of 13 bytes)");
  }
  if (header[0] != TernaryCodeword::kVersion) {
    throw std::runtime_error("wire: unsupported format version " + std::to_string(header[0]) +
                             " (expected 1)");
  }
  codeword.d = get_u32_le(header + 1);
  check_dimension(codeword.d);
  codeword.r = get_f64_le(header + 5);
  check_threshold(codeword.r);
  const std::size_t expected = payload_bytes(codeword.d);
  codeword.payload.resize(expected);
  in.read(reinterpret_cast<char*>(codeword.payload.data()),
          static_cast<std::streamsize>(expected));
  if (in.gcount() != static_cast<std::streamsize>(expected)) {
    throw std::runtime_error("wire: truncated payload (got " + std::to_string(in.gcount()) +
                             " of " + std::to_string(expected) + " bytes)");
  }
  return true;
}

}  // namespace dqsgd
