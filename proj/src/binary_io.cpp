#include "reel/binary_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>

#include "reel/error.hpp"

namespace reel {

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian; big-endian hosts need byte swapping");

namespace {

constexpr std::uint64_t kMaxString = 1 << 24;

}  // namespace

BinaryWriter::BinaryWriter(const std::string& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw UsageError("cannot open for writing: " + path);
  buf_.resize(1 << 20);
  out_.rdbuf()->pubsetbuf(buf_.data(), static_cast<std::streamsize>(buf_.size()));
}

void BinaryWriter::u8(std::uint8_t v) { out_.write(reinterpret_cast<const char*>(&v), 1); }
void BinaryWriter::u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
void BinaryWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
void BinaryWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), 8); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::bytes(std::span<const std::uint8_t> data) {
  out_.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void BinaryWriter::f64s(std::span<const double> data) {
  out_.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
}

void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw FormatError("write failed: " + path_);
  out_.close();
}

BinaryReader::BinaryReader(const std::string& path) : path_(path) {
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  in_.open(path, std::ios::binary);
  if (ec || !in_) throw FormatError("cannot open dataset file: " + path);
}

void BinaryReader::read_raw(void* dst, std::size_t n, const char* what) {
  if (offset_ + n > size_) {
    throw FormatError(path_ + ": truncated while reading " + what + " at offset " +
                      std::to_string(offset_) + " (need " + std::to_string(n) + " bytes, file has " +
                      std::to_string(size_) + ")");
  }
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (!in_) throw FormatError(path_ + ": read error at offset " + std::to_string(offset_));
  offset_ += n;
}

std::uint8_t BinaryReader::u8() {
  std::uint8_t v;
  read_raw(&v, 1, "u8");
  return v;
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  read_raw(&v, 4, "u32");
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read_raw(&v, 8, "u64");
  return v;
}

double BinaryReader::f64() {
  double v;
  read_raw(&v, 8, "f64");
  return v;
}

std::string BinaryReader::str() {
  const std::uint64_t at = offset_;
  const std::uint64_t n = u64();
  if (n > kMaxString) {
    throw FormatError(path_ + ": implausible string length " + std::to_string(n) + " at offset " +
                      std::to_string(at));
  }
  std::string s(n, '\0');
  read_raw(s.data(), n, "string");
  return s;
}

void BinaryReader::bytes(std::span<std::uint8_t> out) { read_raw(out.data(), out.size(), "bytes"); }

void BinaryReader::f64s(std::span<double> out) {
  read_raw(out.data(), out.size() * sizeof(double), "f64 block");
}

void BinaryReader::expect_magic(const std::string& magic) {
  std::string got(magic.size(), '\0');
  read_raw(got.data(), got.size(), "magic");
  if (got != magic) {
    throw FormatError(path_ + ": bad magic at offset 0, expected \"" + magic + "\"");
  }
}

void BinaryReader::require(std::uint64_t count, std::uint64_t size, const char* what) {
  const std::uint64_t remaining = size_ - offset_;
  if (size != 0 && count > remaining / size) {
    throw FormatError(path_ + ": truncated " + what + " at offset " + std::to_string(offset_) +
                      " (need " + std::to_string(count) + " x " + std::to_string(size) +
                      " bytes, " + std::to_string(remaining) + " remain)");
  }
}

}  // namespace reel
