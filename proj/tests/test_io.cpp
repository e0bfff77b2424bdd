#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "codedp/camera.hpp"
#include "codedp/errors.hpp"
#include "codedp/grid.hpp"
#include "codedp/image_io.hpp"
#include "codedp/psf.hpp"
#include "codedp/render.hpp"
#include "codedp/serialize.hpp"

using namespace codedp;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "codedp_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

Grid random_grid(int rows, int cols, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  Grid g(rows, cols);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = uni(rng);
  return g;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 714.2857142857143, -41.64445629, 0.0, 1e-300, -1.7e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(4.0) == "4");
}

TEST_CASE("manifest keeps order and survives comments") {
  const auto dir = temp_dir();
  const std::string path = (dir / "manifest.txt").string();

  Manifest m;
  m.set("zeta", "last=value=with=equals");
  m.set("alpha", 0.125);
  m.set("beta", "two words");
  m.set("alpha", 0.25);  // overwrite keeps the original position
  m.save(path);

  // Inject a comment and a blank line; the loader must skip both.
  {
    std::ofstream out(path, std::ios::app);
    out << "\n# trailing comment\n";
  }

  Manifest r = Manifest::load(path);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].first == "zeta");
  CHECK(r.entries[1].first == "alpha");
  CHECK(r.get("zeta") == "last=value=with=equals");
  CHECK(r.get_double("alpha") == 0.25);
  CHECK(r.get_or("missing", "fallback") == "fallback");
  CHECK(!r.has("missing"));
  CHECK_THROWS_AS(r.get("missing"), IoError);

  std::filesystem::remove_all(dir);
}

TEST_CASE("content hash matches the published test vector") {
  // FNV-1a 64 of "abc".
  CHECK(hash_hex(fnv1a64("abc", 3)) == "e71fa2190541574b");
  CHECK(hash_hex(fnv1a64("", 0)) == "cbf29ce484222325");  // offset basis
  const auto dir = temp_dir();
  const std::string path = (dir / "blob.bin").string();
  std::ofstream(path, std::ios::binary) << "abc";
  CHECK(fnv1a64_file(path) == fnv1a64("abc", 3));
  CHECK_THROWS_AS(fnv1a64_file((dir / "missing.bin").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pgm8 writes the exact byte layout") {
  const auto dir = temp_dir();
  const std::string path = (dir / "g.pgm").string();
  Grid g(2, 2);
  g(0, 0) = 0.0;
  g(0, 1) = 1.0;
  g(1, 0) = 0.5;
  g(1, 1) = 2.0;  // clamps to white
  save_pgm8(path, g);
  const auto bytes = slurp(path);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(std::memcmp(bytes.data(), header.data(), header.size()) == 0);
  CHECK(bytes[header.size() + 0] == 0);
  CHECK(bytes[header.size() + 1] == 255);
  CHECK(bytes[header.size() + 2] == 128);  // 0.5 rounds to 128 of 255
  CHECK(bytes[header.size() + 3] == 255);

  Image back = load_image_any(path);
  REQUIRE(back.num_channels() == 1);
  CHECK(back.channels[0](0, 1) == 1.0);
  CHECK(back.channels[0](1, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}

TEST_CASE("pgm16 stores the most significant byte first") {
  const auto dir = temp_dir();
  const std::string path = (dir / "g16.pgm").string();
  Grid g(1, 2);
  g(0, 0) = 1.0;
  g(0, 1) = 0.0;
  save_pgm16(path, g);
  const auto bytes = slurp(path);
  REQUIRE(bytes.size() >= 4);
  // 65535 then 0, big-endian sample order.
  CHECK(bytes[bytes.size() - 4] == 0xFF);
  CHECK(bytes[bytes.size() - 3] == 0xFF);
  CHECK(bytes[bytes.size() - 2] == 0x00);
  CHECK(bytes[bytes.size() - 1] == 0x00);
  Image back = load_image_any(path);
  CHECK(back.channels[0](0, 0) == 1.0);
  CHECK(back.channels[0](0, 1) == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ppm8 carries three channels") {
  const auto dir = temp_dir();
  const std::string path = (dir / "c.ppm").string();
  Image img(2, 3, 3);
  img.channels[0](0, 0) = 1.0;
  img.channels[1](1, 1) = 0.5;
  img.channels[2](1, 2) = 1.0;
  save_ppm8(path, img);
  Image back = load_image_any(path);
  REQUIRE(back.num_channels() == 3);
  CHECK(back.channels[0](0, 0) == 1.0);
  CHECK(back.channels[1](1, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  CHECK(back.channels[2](1, 2) == 1.0);
  CHECK(back.channels[2](0, 0) == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pfm round-trips bit-exactly and stores rows bottom-up") {
  const auto dir = temp_dir();
  const std::string path = (dir / "f.pfm").string();

  Grid g = random_grid(5, 4, 77);
  save_pfm(path, g);
  Grid back = load_pfm_gray(path);
  REQUIRE(back.same_shape(g));
  // Exact equality: doubles pass through float32 the same way both directions.
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(back[i] == static_cast<double>(static_cast<float>(g[i])));

  // Header says little-endian ("-1.0" scale) and the first stored row is the
  // bottom image row.
  Grid two(2, 1);
  two(0, 0) = 1.0;  // top
  two(1, 0) = 2.0;  // bottom
  save_pfm(path, two);
  const auto bytes = slurp(path);
  const std::string header = "Pf\n1 2\n-1.0\n";
  REQUIRE(bytes.size() == header.size() + 8);
  CHECK(std::memcmp(bytes.data(), header.data(), header.size()) == 0);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + header.size(), 4);
  CHECK(first == 2.0f);

  Image rgb(3, 2, 3);
  for (int ch = 0; ch < 3; ++ch) rgb.channels[ch] = random_grid(3, 2, 100 + ch);
  const std::string cpath = (dir / "rgb.pfm").string();
  save_pfm(cpath, rgb);
  Image rback = load_pfm(cpath);
  REQUIRE(rback.num_channels() == 3);
  for (int ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < rgb.channels[ch].size(); ++i)
      CHECK(rback.channels[ch][i] ==
            static_cast<double>(static_cast<float>(rgb.channels[ch][i])));

  // Gray view of an RGB image averages the channels.
  Grid gray = load_gray_any(cpath);
  CHECK(gray(0, 0) == doctest::Approx((rback.channels[0](0, 0) + rback.channels[1](0, 0) +
                                       rback.channels[2](0, 0)) /
                                      3.0)
                          .epsilon(1e-12));

  CHECK_THROWS_AS(load_pfm((dir / "missing.pfm").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("signed preview colors the sign") {
  const auto dir = temp_dir();
  const std::string path = (dir / "s.ppm").string();
  Grid g(1, 3);
  g(0, 0) = -1.0;
  g(0, 1) = 0.0;
  g(0, 2) = 1.0;
  save_signed_ppm(path, g, 1.0);
  Image img = load_image_any(path);
  // Negative leans blue, zero is white, positive leans red.
  CHECK(img.channels[2](0, 0) > img.channels[0](0, 0));
  CHECK(img.channels[0](0, 1) == 1.0);
  CHECK(img.channels[1](0, 1) == 1.0);
  CHECK(img.channels[2](0, 1) == 1.0);
  CHECK(img.channels[0](0, 2) > img.channels[2](0, 2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("psf stack container round-trips") {
  const auto dir = temp_dir();
  const std::string stack_dir = (dir / "stack").string();

  CameraConfig cam;
  cam.num_planes = 5;
  cam.max_blur_px = 6.0;
  PsfStack st = generate_psf_stack(cam);
  save_psf_stack(stack_dir, st);

  PsfStack back = load_psf_stack(stack_dir);
  REQUIRE(back.num_planes() == st.num_planes());
  CHECK(back.kernel_extent_px == st.kernel_extent_px);
  CHECK(back.coded == st.coded);
  for (int p = 0; p < st.num_planes(); ++p) {
    CHECK(back.planes[p].signed_blur_px == st.planes[p].signed_blur_px);
    CHECK(max_abs_diff(back.planes[p].left, st.planes[p].left) == 0.0);
    CHECK(max_abs_diff(back.planes[p].right, st.planes[p].right) == 0.0);
  }
  CHECK(back.camera.num_planes == 5);
  CHECK(back.camera.max_blur_px == 6.0);
  CHECK_NOTHROW(back.validate());

  Manifest m = Manifest::load(stack_dir + "/manifest.txt");
  CHECK(m.get("num_planes") == "5");
  CHECK(m.get("normalization") == "pair_sum_1");
  CHECK(m.has("stack_hash"));
  // The recorded hash matches the payload on disk.
  CHECK(m.get("stack_hash") == hash_hex(fnv1a64_file(stack_dir + "/stack.bin")));

  // Corrupting the container magic must be detected.
  {
    std::fstream f(stack_dir + "/stack.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XX", 2);
  }
  CHECK_THROWS_AS(load_psf_stack(stack_dir), IoError);

  CHECK_THROWS_AS(load_psf_stack((dir / "nowhere").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("capture directory round-trips including noise tags") {
  const auto dir = temp_dir();
  const std::string cap_dir = (dir / "cap").string();

  DualPixelCapture cap;
  cap.left = Image(6, 5, 1);
  cap.right = Image(6, 5, 1);
  cap.left.channels[0] = random_grid(6, 5, 7, 0.0, 1.0);
  cap.right.channels[0] = random_grid(6, 5, 8, 0.0, 1.0);
  cap.noise = NoiseParams{0.01, 0.002, 42};
  save_capture(cap_dir, cap);

  DualPixelCapture back = load_capture(cap_dir);
  REQUIRE(back.noise.has_value());
  CHECK(back.noise->a == 0.01);
  CHECK(back.noise->b == 0.002);
  CHECK(back.noise->seed == 42);
  // Float32 is the storage precision of the pfm payloads.
  for (std::size_t i = 0; i < cap.left.channels[0].size(); ++i) {
    CHECK(back.left.channels[0][i] ==
          static_cast<double>(static_cast<float>(cap.left.channels[0][i])));
    CHECK(back.right.channels[0][i] ==
          static_cast<double>(static_cast<float>(cap.right.channels[0][i])));
  }

  DualPixelCapture clean;
  clean.left = cap.left;
  clean.right = cap.right;
  const std::string clean_dir = (dir / "clean").string();
  save_capture(clean_dir, clean);
  CHECK(!load_capture(clean_dir).noise.has_value());

  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
