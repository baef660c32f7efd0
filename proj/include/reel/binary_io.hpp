#pragma once

// Little-endian readers and writers shared by the dataset formats. Readers
// track the byte offset so format errors can name it.

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace reel {

class BinaryWriter {
 public:
  /// Throws UsageError when the file cannot be opened.
  explicit BinaryWriter(const std::string& path);

  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  void bytes(std::span<const std::uint8_t> data);
  void f64s(std::span<const double> data);
  /// Flushes and throws FormatError if any write failed.
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  /// Throws FormatError when the file cannot be opened.
  explicit BinaryReader(const std::string& path);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  void bytes(std::span<std::uint8_t> out);
  void f64s(std::span<double> out);
  /// Throws FormatError unless the next bytes equal `magic`.
  void expect_magic(const std::string& magic);
  /// Throws FormatError when `count` items of `size` bytes would run past the end.
  void require(std::uint64_t count, std::uint64_t size, const char* what);

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t file_size() const noexcept { return size_; }
  const std::string& path() const noexcept { return path_; }

 private:
  void read_raw(void* dst, std::size_t n, const char* what);

  std::ifstream in_;
  std::string path_;
  std::uint64_t offset_ = 0;
  std::uint64_t size_ = 0;
};

}  // namespace reel
