#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "io.hpp"
#include "oracles.hpp"
#include "skrock/error.hpp"

using namespace skrock;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("skrock_io_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

using Io = TempDir;

TEST_F(Io, PgmRoundTripAndAscii) {
  Matrix img(3, 4);
  img << 0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 255;
  io::write_pgm(dir_ / "a.pgm", img);
  EXPECT_EQ(io::read_pgm(dir_ / "a.pgm"), img);
  EXPECT_EQ(io::read_image(dir_ / "a.pgm"), img);

  std::ofstream(dir_ / "b.pgm") << "P2\n# comment\n2 2\n15\n0 5\n10 15\n";
  Matrix expect(2, 2);
  expect << 0, 5, 10, 15;
  EXPECT_EQ(io::read_pgm(dir_ / "b.pgm"), expect);

  Matrix wide(1, 2);
  wide << 1000, 65535;
  io::write_pgm(dir_ / "c.pgm", wide, 65535);
  EXPECT_EQ(io::read_pgm(dir_ / "c.pgm"), wide);

  std::ofstream(dir_ / "bad.pgm") << "P6\n1 1\n255\n";
  EXPECT_THROW(io::read_pgm(dir_ / "bad.pgm"), IoError);
  EXPECT_THROW(io::read_pgm(dir_ / "missing.pgm"), IoError);
}

TEST_F(Io, RawImageAndCsv) {
  std::mt19937_64 rng(1);
  const Matrix m = Eigen::Map<Matrix>(oracle::random_vector(12, rng).data(), 3, 4);
  io::write_raw_image(dir_ / "m.raw", m);
  EXPECT_EQ(io::read_image(dir_ / "m.raw"), m);

  std::ofstream(dir_ / "e.csv") << "# endmembers\n0.1,0.2\n\n0.3,0.4\n0.5,0.6\n";
  const Matrix e = io::read_csv_matrix(dir_ / "e.csv");
  ASSERT_EQ(e.rows(), 3);
  ASSERT_EQ(e.cols(), 2);
  EXPECT_DOUBLE_EQ(e(2, 1), 0.6);
  std::ofstream(dir_ / "ragged.csv") << "1,2\n3\n";
  EXPECT_THROW(io::read_csv_matrix(dir_ / "ragged.csv"), IoError);
}

TEST_F(Io, FmtRoundTrips) {
  std::mt19937_64 rng(2);
  for (double v : oracle::random_vector(100, rng, 1e5)) EXPECT_EQ(std::stod(io::fmt(v)), v);
  EXPECT_EQ(std::stod(io::fmt(0.1)), 0.1);
}

TEST_F(Io, CsvWriterHeaderAndRows) {
  io::CsvWriter w(dir_ / "t.csv", {"a", "b"});
  w.cell(std::int64_t{3}).cell(0.5).end_row();
  w.cell(std::string("x")).cell(-1).end_row();
  EXPECT_FALSE(fs::exists(dir_ / "t.csv"));
  w.close();
  EXPECT_EQ(slurp(dir_ / "t.csv"), "a,b\n3,0.5\nx,-1\n");
}

TEST_F(Io, Sha256OfKnownContent) {
  std::ofstream(dir_ / "abc", std::ios::binary) << "abc";
  EXPECT_EQ(io::sha256_file(dir_ / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(Io, TraceRoundTrip) {
  const auto g = model_gaussian((Vector(3) << 1, 0.5, 0.2).finished());
  SamplerConfig c;
  c.kernel = KernelType::skrock;
  c.stages = 4;
  c.delta = 0.3;
  c.n_iterations = 57;
  c.burn_in = 7;
  c.thinning = 5;
  c.seed = 99;
  const auto t = run_chain(*g, c, Vector::Ones(3));
  const auto files = io::write_trace(dir_, "chain", t, {{"label", "x"}});
  nlohmann::json h;
  const auto back = io::read_trace(files.header, &h);
  EXPECT_EQ(back.samples, t.samples);
  EXPECT_EQ(back.iterations, t.iterations);
  EXPECT_EQ(back.gradient_evals, t.gradient_evals);
  EXPECT_EQ(back.config.stages, 4);
  EXPECT_EQ(back.config.seed, 99u);
  EXPECT_EQ(back.config.delta, 0.3);
  EXPECT_EQ(h.at("label"), "x");
  EXPECT_EQ(h.at("dimension"), 3);
  ASSERT_EQ(back.trace_statistic.size(), t.trace_statistic.size());
  for (Eigen::Index i = 0; i < t.trace_statistic.size(); ++i) EXPECT_EQ(back.trace_statistic[i], t.trace_statistic[i]);

  fs::resize_file(files.samples, 16);
  EXPECT_THROW(io::read_trace(files.header), IoError);
}
