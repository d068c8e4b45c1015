#include "cil/moments.hpp"

#include <fstream>

#include "cil/binary_io.hpp"

namespace cil {

void write_moments(std::ostream& out, const RunningMomentsd& m) {
  const auto d = m.dim();
  binary::write_magic(out, "MOM1");
  binary::write(out, static_cast<std::uint32_t>(d));
  binary::write(out, static_cast<std::uint64_t>(m.count()));
  for (Eigen::Index i = 0; i < d; ++i) binary::write(out, m.b()(i));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) binary::write(out, m.a()(i, j));
  binary::require_good(out, "moments");
}

RunningMomentsd read_moments(std::istream& in) {
  binary::expect_magic(in, "MOM1");
  const auto d = static_cast<Eigen::Index>(binary::read<std::uint32_t>(in, "moments header"));
  const auto count = binary::read<std::uint64_t>(in, "moments header");
  if (d == 0) throw Error(ErrorCode::InvalidConfig, "moments dimension is zero");
  Vectord b(d);
  for (Eigen::Index i = 0; i < d; ++i) b(i) = binary::read<double>(in, "moments b");
  Matrixd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) a(i, j) = binary::read<double>(in, "moments a");
  mirror_upper(a);
  return RunningMomentsd::from_parts(std::move(a), std::move(b), count);
}

void save_moments(const std::filesystem::path& path, const RunningMomentsd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_moments(out, m);
}

RunningMomentsd load_moments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  auto m = read_moments(in);
  binary::expect_eof(in, "moments");
  return m;
}

}  // namespace cil
