#include "nkm/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nkm {

namespace {

constexpr char kMagic[4] = {'N', 'K', 'M', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kMapTypeRFF = 0;
constexpr std::uint8_t kMapTypeNystrom = 1;

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; byte swapping is not implemented");

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& M) {  // row-major payload
    u32(static_cast<std::uint32_t>(M.rows()));
    u32(static_cast<std::uint32_t>(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) f64(M(i, j));
  }
  void vector(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
};

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("cannot open model file: " + p);
  }
  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated model file: " + path);
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    std::string s(u32(), '\0');
    if (!s.empty()) bytes(s.data(), s.size());
    return s;
  }
  Eigen::MatrixXd matrix() {
    const auto rows = static_cast<Eigen::Index>(u32());
    const auto cols = static_cast<Eigen::Index>(u32());
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = f64();
    return M;
  }
  Eigen::VectorXd vector() {
    const auto n = static_cast<Eigen::Index>(u32());
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
};

void write_rff(Writer& w, const RFFMap& map) {
  w.u8(kMapTypeRFF);
  w.u32(static_cast<std::uint32_t>(map.input_dim()));
  w.u32(static_cast<std::uint32_t>(map.num_features()));
  w.f64(map.sigma());
  w.u64(map.seed());
  const Eigen::MatrixXd& Z = map.frequencies();
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) w.f64(Z(i, j));
}

RFFMap read_rff(Reader& r) {
  if (r.u8() != kMapTypeRFF)
    throw std::runtime_error("expected an RFF map record: " + r.path);
  const auto d = static_cast<Eigen::Index>(r.u32());
  const auto D = static_cast<Eigen::Index>(r.u32());
  const double sigma = r.f64();
  const std::uint64_t seed = r.u64();
  Eigen::MatrixXd Z(D, d);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < d; ++j) Z(i, j) = r.f64();
  return RFFMap::from_frequencies(std::move(Z), sigma, seed);
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);

  w.u32(static_cast<std::uint32_t>(model.net.input_dim()));
  w.u32(static_cast<std::uint32_t>(model.net.num_classes()));

  w.u32(static_cast<std::uint32_t>(model.label_names.size()));
  for (const auto& name : model.label_names) w.str(name);

  w.vector(model.stats.mean);
  w.vector(model.stats.std);

  w.u32(static_cast<std::uint32_t>(model.net.blocks.size()));
  for (const auto& blk : model.net.blocks) {
    w.u32(static_cast<std::uint32_t>(blk.m()));
    w.u8(static_cast<std::uint8_t>(blk.pooling));
    w.u8(blk.freeze ? 1 : 0);
    for (const auto& t : blk.transforms) {
      w.matrix(t.V);
      w.vector(t.b);
    }
    if (blk.pooling == Pooling::Conv) w.vector(blk.conv_filter);
    write_rff(w, blk.map);
  }

  w.matrix(model.net.W);
  w.vector(model.net.b);
  if (!w.out) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a model file (bad magic): " + path);
  if (r.u32() != kVersion)
    throw std::runtime_error("unsupported model file version: " + path);

  Model model;
  const auto input_dim = r.u32();
  (void)input_dim;
  const auto num_classes = r.u32();

  const auto n_labels = r.u32();
  model.label_names.reserve(n_labels);
  for (std::uint32_t i = 0; i < n_labels; ++i) model.label_names.push_back(r.str());
  if (n_labels != num_classes)
    throw std::runtime_error("label table size mismatch: " + path);

  model.stats.mean = r.vector();
  model.stats.std = r.vector();

  const auto n_blocks = r.u32();
  model.net.blocks.reserve(n_blocks);
  for (std::uint32_t l = 0; l < n_blocks; ++l) {
    Block blk;
    const auto m = r.u32();
    blk.pooling = static_cast<Pooling>(r.u8());
    blk.freeze = r.u8() != 0;
    blk.transforms.resize(m);
    for (auto& t : blk.transforms) {
      t.V = r.matrix();
      t.b = r.vector();
    }
    if (blk.pooling == Pooling::Conv) blk.conv_filter = r.vector();
    blk.map = read_rff(r);
    model.net.blocks.push_back(std::move(blk));
  }

  model.net.W = r.matrix();
  model.net.b = r.vector();
  model.net.validate();
  return model;
}

void save_rff_map(const std::string& path, const RFFMap& map) {
  Writer w(path);
  write_rff(w, map);
  if (!w.out) throw std::runtime_error("write failed: " + path);
}

RFFMap load_rff_map(const std::string& path) {
  Reader r(path);
  return read_rff(r);
}

void save_nystrom_map(const std::string& path, const NystromMap& map) {
  Writer w(path);
  w.u8(kMapTypeNystrom);
  w.u32(static_cast<std::uint32_t>(map.input_dim()));
  w.u32(static_cast<std::uint32_t>(map.prototype_count()));
  w.f64(map.sigma());
  w.u64(0);  // maps rebuilt from prototypes carry no seed
  const Eigen::MatrixXd& P = map.prototypes();
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) w.f64(P(i, j));
  if (!w.out) throw std::runtime_error("write failed: " + path);
}

NystromMap load_nystrom_map(const std::string& path) {
  Reader r(path);
  if (r.u8() != kMapTypeNystrom)
    throw std::runtime_error("expected a Nystrom map record: " + path);
  const auto d = static_cast<Eigen::Index>(r.u32());
  const auto m = static_cast<Eigen::Index>(r.u32());
  const double sigma = r.f64();
  (void)r.u64();
  Eigen::MatrixXd P(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) P(i, j) = r.f64();
  return NystromMap::create(std::move(P), sigma);
}

}  // namespace nkm
