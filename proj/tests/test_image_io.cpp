#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "siamte/image_io.hpp"
#include "siamte/rng.hpp"
#include "siamte/tensor.hpp"

using namespace siamte;
namespace fs = std::filesystem;

namespace {

Tensor random_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Tensor t(3, h, w);
  for (double& v : t.data) v = double(rng.uniform_int(256));
  return t;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("siamte_io_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("png round trip is lossless for 8-bit data") {
  Tensor img = random_image(21, 33, 1);
  std::vector<unsigned char> bytes = encode_png(img);
  Tensor back = decode_png(bytes);
  REQUIRE(back.c == 3);
  REQUIRE(back.h == 21);
  REQUIRE(back.w == 33);
  REQUIRE(max_abs_diff(img, back) == 0.0);
}

TEST_CASE("jpeg round trip stays close at high quality") {
  Tensor img = random_image(32, 32, 2);
  // smooth it so jpeg has an easy job
  Tensor smooth(3, 32, 32);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) smooth.at(c, y, x) = 100.0 + 2.0 * y + x;
  smooth.clamp_(0, 255);
  std::vector<unsigned char> bytes = encode_jpeg(quantize_u8(smooth), 95);
  Tensor back = decode_jpeg(bytes);
  REQUIRE(back.same_shape(smooth));
  REQUIRE(max_abs_diff(smooth, back) < 20.0);
  double l1 = 0;
  for (size_t i = 0; i < back.size(); ++i) l1 += std::abs(back.data[i] - smooth.data[i]);
  REQUIRE(l1 / back.size() < 3.0);
}

TEST_CASE("jpeg quality ladder shrinks the payload") {
  Tensor img = random_image(48, 48, 3);
  size_t prev = 0;
  for (int q : {30, 60, 90}) {
    size_t s = encode_jpeg(img, q).size();
    REQUIRE(s > prev);
    prev = s;
  }
}

TEST_CASE("file save and load round trip") {
  TempDir tmp;
  Tensor img = random_image(16, 24, 4);
  fs::path p = tmp.path / "img.png";
  save_png(p.string(), img);
  REQUIRE(fs::exists(p));
  Tensor back = load_image(p.string());
  REQUIRE(max_abs_diff(img, back) == 0.0);
}

TEST_CASE("corrupt bytes are rejected") {
  std::vector<unsigned char> garbage = {0x89, 0x50, 0x4e, 0x47, 0x00, 0x01, 0x02};
  REQUIRE_THROWS(decode_png(garbage));
  REQUIRE_THROWS(decode_jpeg(garbage));
}

TEST_CASE("missing file is a missing-input error") {
  REQUIRE_THROWS_AS(load_image("/nonexistent/path/img.png"), MissingInputError);
}

TEST_CASE("out-of-range pixel values are clipped on encode") {
  Tensor img = Tensor::full(3, 8, 8, 300.0);
  Tensor back = decode_png(encode_png(img));
  REQUIRE(back.max() == 255.0);
  Tensor neg = Tensor::full(3, 8, 8, -5.0);
  REQUIRE(decode_png(encode_png(neg)).min() == 0.0);
}
