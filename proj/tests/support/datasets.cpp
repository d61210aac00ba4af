#include "datasets.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nkm/rng.hpp"

namespace nkm::testsupport {

Dataset make_blobs(int per_class, int num_classes, int dim, double spread,
                   double separation, std::uint64_t seed) {
  const int n = per_class * num_classes;
  Dataset ds;
  ds.X.resize(n, dim);
  ds.y.resize(n);
  ds.num_classes = num_classes;
  for (int c = 0; c < num_classes; ++c) ds.label_names.push_back("c" + std::to_string(c));

  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  int row = 0;
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    center(c % dim) = separation * (1.0 + c / dim);
    if (c % 2 == 1) center(c % dim) = -center(c % dim);
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int j = 0; j < dim; ++j) ds.X(row, j) = center(j) + noise(rng);
      ds.y(row) = c;
    }
  }
  return ds;
}

std::string monk2_csv() {
  static const int domain[6] = {3, 3, 2, 3, 4, 2};
  std::string out = "a1,a2,a3,a4,a5,a6,class\n";
  int a[6];
  for (a[0] = 1; a[0] <= domain[0]; ++a[0])
    for (a[1] = 1; a[1] <= domain[1]; ++a[1])
      for (a[2] = 1; a[2] <= domain[2]; ++a[2])
        for (a[3] = 1; a[3] <= domain[3]; ++a[3])
          for (a[4] = 1; a[4] <= domain[4]; ++a[4])
            for (a[5] = 1; a[5] <= domain[5]; ++a[5]) {
              int ones = 0;
              for (int j = 0; j < 6; ++j) ones += a[j] == 1 ? 1 : 0;
              for (int j = 0; j < 6; ++j) {
                out += std::to_string(a[j]);
                out += ',';
              }
              out += ones == 2 ? "1\n" : "0\n";
            }
  return out;
}

std::string balance_csv() {
  std::string out = "lw,ld,rw,rd,class\n";
  for (int lw = 1; lw <= 5; ++lw)
    for (int ld = 1; ld <= 5; ++ld)
      for (int rw = 1; rw <= 5; ++rw)
        for (int rd = 1; rd <= 5; ++rd) {
          out += std::to_string(lw) + ',' + std::to_string(ld) + ',' +
                 std::to_string(rw) + ',' + std::to_string(rd) + ',';
          const int left = lw * ld, right = rw * rd;
          out += left > right ? "L\n" : (left < right ? "R\n" : "B\n");
        }
  return out;
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  for (int j = 0; j < ds.dim(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  char buf[32];
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      out += buf;
      out += ',';
    }
    out += ds.label_names[static_cast<std::size_t>(ds.y(i))];
    out += '\n';
  }
  return out;
}

std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("nkm_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace nkm::testsupport
