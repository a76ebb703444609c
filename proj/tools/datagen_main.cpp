// qfed-datagen: writes the packaged synthetic clothing dataset as IDX files
// (FashionMNIST file names, so a directory of real files is a drop-in
// replacement). Deterministic for a given seed.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "qfed/dataset.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic two-class clothing dataset in IDX format"};
  std::string out_dir = "data/toy";
  int train_count = 6600;
  int test_count = 1100;
  std::uint64_t seed = 20240801;
  bool gzip = false;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--train", train_count, "training sample count");
  app.add_option("--test", test_count, "test sample count");
  app.add_option("--seed", seed, "generator seed");
  app.add_flag("--gzip", gzip, "write .gz-compressed files");
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string suffix = gzip ? ".gz" : "";
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string() + suffix; };

    const auto train = qfed::data::make_synthetic_clothing(train_count, seed);
    qfed::data::save_idx(train, path("train-images-idx3-ubyte"), path("train-labels-idx1-ubyte"),
                         gzip);
    const auto test = qfed::data::make_synthetic_clothing(test_count, seed + 1);
    qfed::data::save_idx(test, path("t10k-images-idx3-ubyte"), path("t10k-labels-idx1-ubyte"),
                         gzip);
    std::cout << "wrote " << train_count << " train / " << test_count << " test samples to "
              << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
