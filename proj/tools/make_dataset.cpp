// Writes a directory of synthetic photographic-texture PPMs for training and
// evaluation runs in environments without a bundled image corpus.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gsc/errors.hpp"
#include "gsc/image.hpp"
#include "gsc/rng.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic PPM dataset"};
  std::string out_dir;
  int count = 8;
  int size = 64;
  uint64_t seed = 1;
  app.add_option("--out", out_dir, "destination directory")->required();
  app.add_option("--count", count, "number of images")->check(CLI::PositiveNumber);
  app.add_option("--size", size, "square image edge, must be a multiple of 32")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (size % 32 != 0) throw gsc::ConfigError("--size must be a multiple of 32");
    std::filesystem::create_directories(out_dir);
    gsc::Rng rng(seed);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "img_%04d.ppm", i);
      const std::string path = (std::filesystem::path(out_dir) / name).string();
      gsc::write_ppm(path, gsc::synth_image(size, size, rng));
    }
    std::cout << "wrote " << count << " " << size << "x" << size << " images to " << out_dir
              << "\n";
    return 0;
  } catch (const gsc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gsc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
