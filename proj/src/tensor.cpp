#include "gsc/tensor.hpp"

#include <cmath>
#include <fstream>

#include "gsc/bytes.hpp"

namespace gsc {

std::string Tensor::shape_string(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

int64_t Tensor::count(const std::vector<int>& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw DimensionError("non-positive extent in shape " + shape_string(s));
    n *= d;
  }
  return n;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
  }
}

void axpy(Tensor& dst, double a, const Tensor& x) {
  require_same_shape(dst, x, "axpy");
  double* d = dst.data();
  const double* s = x.data();
  for (int64_t i = 0; i < dst.size(); ++i) d[i] += a * s[i];
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  axpy(out, 1.0, b);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  axpy(out, -1.0, b);
  return out;
}

Tensor scaled(const Tensor& a, double s) {
  Tensor out = a;
  double* d = out.data();
  for (int64_t i = 0; i < out.size(); ++i) d[i] *= s;
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_sq(const Tensor& a) { return dot(a, a); }

double l2_norm(const Tensor& a) { return std::sqrt(sum_sq(a)); }

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  f.seekg(0, std::ios::end);
  auto n = static_cast<size_t>(f.tellg());
  f.seekg(0, std::ios::beg);
  std::vector<uint8_t> bytes(n);
  if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (!f) throw DataError("short read on file: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot create file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("short write on file: " + path);
}

}  // namespace gsc
