#include "cil/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "cil/binary_io.hpp"

namespace cil {

namespace {

constexpr std::size_t kIoBufferBytes = 64 * 1024;

std::size_t record_bytes(std::uint32_t dim) { return 4 + 4 * static_cast<std::size_t>(dim); }

template <typename T>
T load_le(const char* p) {
  binary::detail::Bytes<sizeof(T)> bytes{};
  std::memcpy(bytes.data(), p, sizeof(T));
  return binary::detail::from_le<T>(bytes);
}

template <typename T>
void store_le(char* p, T value) {
  const auto bytes = binary::detail::to_le(value);
  std::memcpy(p, bytes.data(), sizeof(T));
}

}  // namespace

EmbeddingReader::EmbeddingReader(const std::filesystem::path& path)
    : path_(path), io_buffer_(kIoBufferBytes) {
  in_.rdbuf()->pubsetbuf(io_buffer_.data(), static_cast<std::streamsize>(io_buffer_.size()));
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(ErrorCode::Io, "cannot open " + path.string());
  binary::expect_magic(in_, "EMB1");
  header_.version = binary::read<std::uint16_t>(in_, "embedding header");
  if (header_.version != kEmbeddingVersion) {
    throw Error(ErrorCode::BadMagic, "unsupported EMB1 version " + std::to_string(header_.version));
  }
  header_.dim = binary::read<std::uint32_t>(in_, "embedding header");
  header_.count = binary::read<std::uint64_t>(in_, "embedding header");
  if (header_.dim == 0) throw Error(ErrorCode::BadMagic, "EMB1 dimension is zero");
  record_buffer_.resize(record_bytes(header_.dim));
}

bool EmbeddingReader::next(EmbeddingRecord& record) {
  if (index_ == header_.count) {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorCode::CountMismatch, path_.string() + " has bytes after the declared " +
                                                std::to_string(header_.count) + " records");
    }
    return false;
  }
  in_.read(record_buffer_.data(), static_cast<std::streamsize>(record_buffer_.size()));
  if (in_.gcount() != static_cast<std::streamsize>(record_buffer_.size())) {
    throw Error(ErrorCode::TruncatedFile, path_.string() + " ends inside record " + std::to_string(index_) +
                                              " of " + std::to_string(header_.count));
  }
  record.label = load_le<std::uint32_t>(record_buffer_.data());
  record.features.resize(header_.dim);
  for (std::uint32_t i = 0; i < header_.dim; ++i) {
    const float v = load_le<float>(record_buffer_.data() + 4 + 4 * static_cast<std::size_t>(i));
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteFeature,
                  "record " + std::to_string(index_) + " feature " + std::to_string(i) + " is not finite");
    }
    record.features(i) = static_cast<double>(v);
  }
  ++index_;
  return true;
}

EmbeddingWriter::EmbeddingWriter(const std::filesystem::path& path, std::uint32_t dim)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dim_(dim), record_buffer_(record_bytes(dim)) {
  if (!out_) throw Error(ErrorCode::Io, "cannot open " + path.string());
  if (dim == 0) throw Error(ErrorCode::InvalidConfig, "EMB1 dimension must be positive");
  binary::write_magic(out_, "EMB1");
  binary::write(out_, kEmbeddingVersion);
  binary::write(out_, dim_);
  binary::write(out_, std::uint64_t{0});
  binary::require_good(out_, path_.string().c_str());
}

EmbeddingWriter::~EmbeddingWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void EmbeddingWriter::write(std::uint32_t label, const Eigen::Ref<const Vectord>& features) {
  require_same_dim(features.size(), static_cast<Eigen::Index>(dim_), "EMB1 record");
  store_le(record_buffer_.data(), label);
  for (std::uint32_t i = 0; i < dim_; ++i) {
    const auto v = static_cast<float>(features(i));
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteInput, "feature " + std::to_string(i) + " of record " +
                                                 std::to_string(count_) + " is not finite as binary32");
    }
    store_le(record_buffer_.data() + 4 + 4 * static_cast<std::size_t>(i), v);
  }
  out_.write(record_buffer_.data(), static_cast<std::streamsize>(record_buffer_.size()));
  ++count_;
}

void EmbeddingWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(4 + 2 + 4);
  binary::write(out_, count_);
  out_.close();
  if (!out_) throw Error(ErrorCode::Io, "write failed: " + path_.string());
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  EmbeddingReader reader(path);
  std::vector<EmbeddingRecord> out;
  EmbeddingRecord r;
  while (reader.next(r)) out.push_back(r);
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  EmbeddingReader reader(path);
  const auto& h = reader.header();
  const std::uintmax_t expected = 18 + h.count * record_bytes(h.dim);
  if (std::filesystem::file_size(path) < expected) {
    throw Error(ErrorCode::TruncatedFile, path.string() + " is shorter than its declared " +
                                              std::to_string(h.count) + " records");
  }
  Dataset data;
  data.features.resize(h.dim, static_cast<Eigen::Index>(h.count));
  data.labels.reserve(static_cast<std::size_t>(h.count));
  EmbeddingRecord r;
  Eigen::Index i = 0;
  while (reader.next(r)) {
    data.features.col(i++) = r.features;
    data.labels.push_back(r.label);
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  EmbeddingWriter writer(path, static_cast<std::uint32_t>(data.dim()));
  for (Eigen::Index i = 0; i < data.size(); ++i) writer.write(data.labels[static_cast<std::size_t>(i)], data.features.col(i));
  writer.close();
}

}  // namespace cil
