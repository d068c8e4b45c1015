#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "cil/dataset.hpp"

namespace cil {

// EMB1 layout (little-endian): "EMB1", version u16 = 1, dim u32, count u64,
// then count x ([label u32][dim x binary32]).
inline constexpr std::uint16_t kEmbeddingVersion = 1;

struct EmbeddingHeader {
  std::uint16_t version = kEmbeddingVersion;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

/// Record-at-a-time EMB1 reader; memory use is O(dim) regardless of count.
class EmbeddingReader {
 public:
  explicit EmbeddingReader(const std::filesystem::path& path);

  const EmbeddingHeader& header() const { return header_; }
  std::uint64_t records_read() const { return index_; }

  // Returns false once all declared records were read; then verifies no bytes remain.
  bool next(EmbeddingRecord& record);

  // Bytes held by the reader's own buffers.
  std::size_t buffer_bytes() const { return io_buffer_.size() + record_buffer_.size(); }

 private:
  std::filesystem::path path_;
  std::vector<char> io_buffer_;
  std::vector<char> record_buffer_;
  std::ifstream in_;
  EmbeddingHeader header_;
  std::uint64_t index_ = 0;
};

/// Streaming EMB1 writer. The count is patched into the header on close().
class EmbeddingWriter {
 public:
  EmbeddingWriter(const std::filesystem::path& path, std::uint32_t dim);
  ~EmbeddingWriter();
  EmbeddingWriter(const EmbeddingWriter&) = delete;
  EmbeddingWriter& operator=(const EmbeddingWriter&) = delete;

  void write(std::uint32_t label, const Eigen::Ref<const Vectord>& features);
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t dim_;
  std::uint64_t count_ = 0;
  std::vector<char> record_buffer_;
  bool closed_ = false;
};

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

}  // namespace cil
