#include "gsc/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gsc/bytes.hpp"
#include "gsc/errors.hpp"

namespace gsc {

namespace {

// Reads the next PPM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

int parse_dim(const std::string& tok, const char* what) {
  if (tok.empty()) throw DataError(std::string("ppm: missing ") + what);
  int v = 0;
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw DataError(std::string("ppm: bad ") + what + " '" + tok + "'");
    }
    v = v * 10 + (ch - '0');
    if (v > 1 << 20) throw DataError(std::string("ppm: ") + what + " too large");
  }
  return v;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ppm: cannot open '" + path + "'");

  if (next_token(in) != "P6") throw DataError("ppm: '" + path + "' is not binary P6");
  const int w = parse_dim(next_token(in), "width");
  const int h = parse_dim(next_token(in), "height");
  const int maxval = parse_dim(next_token(in), "maxval");
  if (w <= 0 || h <= 0) throw DataError("ppm: empty image '" + path + "'");
  if (maxval != 255) {
    throw DataError("ppm: '" + path + "' has maxval " + std::to_string(maxval) +
                    ", only 255 supported");
  }
  // The single whitespace byte after maxval was consumed by next_token.

  const size_t n = static_cast<size_t>(w) * h * 3;
  std::vector<char> raw(n);
  in.read(raw.data(), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw DataError("ppm: '" + path + "' truncated pixel data");
  }

  Tensor img({h, w, 3});
  for (size_t i = 0; i < n; ++i) {
    img[static_cast<int64_t>(i)] = static_cast<uint8_t>(raw[i]) / 255.0;
  }
  return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw DataError("ppm: expected (h,w,3) image, got " + image.shape_str());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("ppm: cannot write '" + path + "'");
  out << "P6\n" << image.dim(1) << " " << image.dim(0) << "\n255\n";
  std::vector<char> raw(static_cast<size_t>(image.size()));
  for (int64_t i = 0; i < image.size(); ++i) {
    double v = std::nearbyint(std::min(1.0, std::max(0.0, image[i])) * 255.0);
    raw[static_cast<size_t>(i)] = static_cast<char>(static_cast<uint8_t>(v));
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("ppm: short write to '" + path + "'");
}

Tensor clamp01(const Tensor& t) {
  Tensor out = t;
  double* d = out.data();
  for (int64_t i = 0; i < out.size(); ++i) {
    d[i] = std::min(1.0, std::max(0.0, d[i]));
  }
  return out;
}

Tensor synth_image(int height, int width, Rng& rng) {
  if (height <= 0 || width <= 0) throw DataError("synth_image: empty dimensions");
  constexpr double kTau = 6.283185307179586;

  // Shared luminance field: random cosine waves with 1/f amplitude decay.
  const int waves = 14;
  std::vector<double> fx(waves), fy(waves), phase(waves), amp(waves);
  for (int k = 0; k < waves; ++k) {
    const double freq = 0.5 + 3.5 * rng.uniform();  // cycles per image
    const double angle = rng.uniform(0.0, kTau);
    fx[k] = freq * std::cos(angle) / width;
    fy[k] = freq * std::sin(angle) / height;
    phase[k] = rng.uniform(0.0, kTau);
    amp[k] = rng.uniform(0.5, 1.0) / freq;
  }
  // Per-channel tint waves give chroma structure distinct from luminance.
  double tint_amp[3], tint_fx[3], tint_fy[3], tint_phase[3], base[3];
  for (int c = 0; c < 3; ++c) {
    tint_amp[c] = rng.uniform(0.05, 0.20);
    const double freq = 0.5 + 1.5 * rng.uniform();
    const double angle = rng.uniform(0.0, kTau);
    tint_fx[c] = freq * std::cos(angle) / width;
    tint_fy[c] = freq * std::sin(angle) / height;
    tint_phase[c] = rng.uniform(0.0, kTau);
    base[c] = rng.uniform(0.35, 0.65);
  }
  const double noise_amp = rng.uniform(0.005, 0.02);

  Tensor img({height, width, 3});
  double lum_min = 1e300, lum_max = -1e300;
  std::vector<double> lum(static_cast<size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (int k = 0; k < waves; ++k) {
        v += amp[k] * std::cos(kTau * (fx[k] * x + fy[k] * y) + phase[k]);
      }
      lum[static_cast<size_t>(y) * width + x] = v;
      lum_min = std::min(lum_min, v);
      lum_max = std::max(lum_max, v);
    }
  }
  const double lum_span = std::max(1e-9, lum_max - lum_min);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double l = (lum[static_cast<size_t>(y) * width + x] - lum_min) / lum_span;
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + 0.55 * (l - 0.5) +
                   tint_amp[c] * std::cos(kTau * (tint_fx[c] * x + tint_fy[c] * y) +
                                          tint_phase[c]) +
                   noise_amp * (rng.uniform() - 0.5);
        img[(static_cast<int64_t>(y) * width + x) * 3 + c] =
            std::min(1.0, std::max(0.0, v));
      }
    }
  }
  return img;
}

std::vector<Tensor> load_image_dir(const std::string& dir, std::vector<std::string>* ids) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw DataError("image directory not found: " + dir);
  }
  std::vector<std::string> names;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      names.push_back(entry.path().filename().string());
    }
  }
  if (names.empty()) throw DataError("no .ppm images in directory: " + dir);
  std::sort(names.begin(), names.end());

  std::vector<Tensor> images;
  images.reserve(names.size());
  for (const std::string& name : names) {
    images.push_back(read_ppm((fs::path(dir) / name).string()));
  }
  if (ids != nullptr) *ids = std::move(names);
  return images;
}

}  // namespace gsc
