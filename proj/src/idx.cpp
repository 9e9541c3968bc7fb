#include "fognet/idx.hpp"

#include <zlib.h>

#include <algorithm>
#include <memory>
#include <type_traits>

namespace fognet {

namespace {

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

void read_exact(gzFile f, void* buf, std::size_t len, std::size_t& offset, const std::string& path) {
  std::size_t done = 0;
  auto* out = static_cast<unsigned char*>(buf);
  while (done < len) {
    unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(len - done, 1u << 30));
    int got = gzread(f, out + done, chunk);
    if (got <= 0)
      throw ParseError(path + ": unexpected end of data at offset " + std::to_string(offset + done) + " (wanted " +
                       std::to_string(len) + " bytes)");
    done += static_cast<std::size_t>(got);
  }
  offset += len;
}

std::uint32_t big_endian(const unsigned char* b) {
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

}  // namespace

IdxTensor read_idx(const std::string& path) {
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw ParseError("cannot open IDX file '" + path + "'");
  std::size_t offset = 0;
  unsigned char magic[4];
  read_exact(f.get(), magic, 4, offset, path);
  if (magic[0] != 0 || magic[1] != 0) throw ParseError(path + ": bad magic at offset 0");
  if (magic[2] != 0x08) throw ParseError(path + ": unsupported element type at offset 2 (only unsigned byte)");
  const int rank = magic[3];
  if (rank < 1 || rank > 4) throw ParseError(path + ": bad rank " + std::to_string(rank) + " at offset 3");
  IdxTensor t;
  std::size_t total = 1;
  for (int k = 0; k < rank; ++k) {
    unsigned char b[4];
    std::size_t at = offset;
    read_exact(f.get(), b, 4, offset, path);
    std::uint32_t dim = big_endian(b);
    if (dim == 0 && k > 0) throw ParseError(path + ": zero dimension at offset " + std::to_string(at));
    t.dims.push_back(dim);
    total *= dim;
  }
  t.data.resize(total);
  if (total) read_exact(f.get(), t.data.data(), total, offset, path);
  unsigned char extra;
  if (gzread(f.get(), &extra, 1) > 0) throw ParseError(path + ": trailing bytes after offset " + std::to_string(offset));
  return t;
}

void write_idx(const std::string& path, const IdxTensor& t, bool gzip) {
  std::size_t total = 1;
  for (auto d : t.dims) total *= d;
  if (t.dims.empty() || t.dims.size() > 4 || total != t.data.size())
    throw InvalidArgument("IDX tensor dims do not match its data");
  GzHandle f(gzopen(path.c_str(), gzip ? "wb9" : "wbT"));
  if (!f) throw ParseError("cannot create IDX file '" + path + "'");
  std::vector<unsigned char> buf{0, 0, 0x08, static_cast<unsigned char>(t.dims.size())};
  for (auto d : t.dims)
    for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<unsigned char>(d >> s));
  buf.insert(buf.end(), t.data.begin(), t.data.end());
  if (gzwrite(f.get(), buf.data(), static_cast<unsigned>(buf.size())) != static_cast<int>(buf.size()))
    throw ParseError("failed writing IDX file '" + path + "'");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int limit, int classes) {
  IdxTensor img = read_idx(images_path);
  IdxTensor lab = read_idx(labels_path);
  if (img.dims.size() != 3) throw ParseError(images_path + ": expected a rank-3 image tensor (magic 0x00000803)");
  if (lab.dims.size() != 1) throw ParseError(labels_path + ": expected a rank-1 label tensor (magic 0x00000801)");
  if (img.dims[0] != lab.dims[0])
    throw ParseError("image and label counts differ (" + std::to_string(img.dims[0]) + " vs " +
                     std::to_string(lab.dims[0]) + ")");
  int N = static_cast<int>(img.dims[0]);
  if (limit >= 0) N = std::min(N, limit);
  Dataset ds;
  ds.d = static_cast<int>(img.dims[1] * img.dims[2]);
  ds.classes = classes;
  ds.x.resize(static_cast<std::size_t>(N) * ds.d);
  ds.y.resize(N);
  for (std::size_t k = 0; k < ds.x.size(); ++k) ds.x[k] = img.data[k] / 255.0;
  for (int k = 0; k < N; ++k) {
    if (lab.data[k] >= classes)
      throw ParseError(labels_path + ": label " + std::to_string(lab.data[k]) + " out of range at offset " +
                       std::to_string(8 + k));
    ds.y[k] = lab.data[k];
  }
  return ds;
}

}  // namespace fognet
