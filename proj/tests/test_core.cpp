#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "blur2vid/core/image.hpp"
#include "blur2vid/core/image_io.hpp"
#include "blur2vid/core/rng.hpp"
#include "blur2vid/core/tensor.hpp"
#include "test_util.hpp"

using namespace blur2vid;

TEST_CASE("tensor basics") {
  Tensor<double> t({2, 3, 4});
  CHECK(t.rank() == 3);
  CHECK(t.size() == 24);
  t(1, 2, 3) = 7.5;
  CHECK(t.at(23) == 7.5);
  CHECK(t.all_finite());

  auto m = t.as_matrix(6, 4);
  CHECK(m(5, 3) == 7.5);

  CHECK_THROWS_AS(t.as_matrix(5, 4), validation_error);
  CHECK_THROWS_AS(t.reshaped({2, 2}), validation_error);
  CHECK(t.reshaped({24}).rank() == 1);
}

TEST_CASE("rng determinism and range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
  Rng d(9);
  int lo = 100, hi = -100;
  for (int i = 0; i < 1000; ++i) {
    const int v = d.uniform_int(2, 6);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 2);
  CHECK(hi == 6);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("bilinear resize identity and box average") {
  Rng rng(3);
  const Image img = random_tensor<double>({8, 10, 3}, rng);
  const Image same = bilinear_resize(img, 8, 10);
  CHECK(max_abs_diff(img, same) == 0.0);

  // Exact 2x downsample with half-pixel centers averages 2x2 blocks.
  const Image half = bilinear_resize(img, 4, 5);
  for (Eigen::Index y = 0; y < 4; ++y)
    for (Eigen::Index x = 0; x < 5; ++x)
      for (Eigen::Index c = 0; c < 3; ++c) {
        const double expect = 0.25 * (img(2 * y, 2 * x, c) + img(2 * y, 2 * x + 1, c) +
                                      img(2 * y + 1, 2 * x, c) + img(2 * y + 1, 2 * x + 1, c));
        CHECK(half(y, x, c) == doctest::Approx(expect).epsilon(1e-12));
      }
}

TEST_CASE("average and hstack") {
  std::vector<Image> imgs;
  for (int i = 0; i < 4; ++i) imgs.push_back(Image::constant({3, 3, 3}, 0.1 * i));
  const Image avg = average_images(imgs);
  CHECK(avg(1, 1, 1) == doctest::Approx(0.15).epsilon(1e-12));

  const Image sheet = hstack(imgs, 2, 1.0);
  CHECK(sheet.dim(1) == 4 * 3 + 3 * 2);
  CHECK(sheet(0, 3, 0) == 1.0);  // separator
}

TEST_CASE("png round trip") {
  b2vtest::TempDir tmp("png");
  const Image img = b2vtest::make_natural_image(20, 30, 5);
  const auto path = (tmp.path() / "img.png").string();
  write_png(path, img);
  const Image back = read_png(path);
  CHECK(back.dim(0) == 20);
  CHECK(back.dim(1) == 30);
  CHECK(max_abs_diff(img, back) <= 1.0 / 255.0);

  CHECK_THROWS_AS(read_png((tmp.path() / "missing.png").string()), validation_error);
}
