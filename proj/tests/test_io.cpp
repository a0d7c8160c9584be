#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "tising/io.hpp"

using namespace tising;

namespace {

template <class F>
std::size_t parse_error_line(F f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_double(-kInf), "-inf");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(20.0), "20");
  EXPECT_EQ(format_double(-1250.5), "-1250.5");
  EXPECT_EQ(std::stod(format_double(1e-7)), 1e-7);
}

TEST(Hyperedges, RoundTrip) {
  std::istringstream in("# triangle\n3 5\n0 1 2 0.5\n\n1 3 4 -2\n");
  const auto t = read_hyperedges(in);
  EXPECT_EQ(t.p(), 3);
  EXPECT_EQ(t.n(), 5);
  ASSERT_EQ(t.edge_count(), 2u);
  std::ostringstream out;
  write_hyperedges(out, t);
  EXPECT_EQ(out.str(), "3 5\n0 1 2 0.5\n1 3 4 -2\n");
  std::istringstream again(out.str());
  EXPECT_EQ(read_hyperedges(again).coef(1), -2.0);
}

TEST(Hyperedges, ErrorsNameTheLine) {
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("3 5\n0 1 2 0.5\n0 1 x 1\n");
              read_hyperedges(in);
            }),
            3u);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("3 5\n# c\n0 1 7 0.5\n");
              read_hyperedges(in);
            }),
            3u);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("2 4\n1 0 1\n");
              read_hyperedges(in);
            }),
            2u);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("2 4\n0 1\n");
              read_hyperedges(in);
            }),
            2u);
  EXPECT_GT(parse_error_line([] {
              std::istringstream in("2 4\n0 1 1\n0 1 2\n");
              read_hyperedges(in);
            }),
            0u);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream in("");
              read_hyperedges(in);
            }),
            1u);
}

TEST(HsbmSpecFile, SymmetrizesOnLoad) {
  std::istringstream in("2 2\n0.5 0.5\n0.8 0.2\n0.4 0.6\n");
  const auto s = read_hsbm_spec(in);
  EXPECT_EQ(s.K, 2);
  EXPECT_NEAR(s.theta[1], 0.3, 1e-15);
  EXPECT_NEAR(s.theta[2], 0.3, 1e-15);
  EXPECT_NO_THROW(s.validate());
  std::istringstream bad("2 2\n0.5 0.6\n0.8 0.2\n0.2 0.6\n");
  EXPECT_THROW(read_hsbm_spec(bad), ParseError);
  std::istringstream short_in("2 2\n0.5 0.5\n0.8 0.2\n");
  EXPECT_THROW(read_hsbm_spec(short_in), ParseError);
}

TEST(Network, SymmetricAndNoSelfLoops) {
  std::istringstream in("0 1 0.5\n2 1 0.25\n");
  const auto a = read_network(in);
  EXPECT_EQ(a.rows(), 3);
  EXPECT_EQ(a.coeff(1, 0), 0.5);
  EXPECT_EQ(a.coeff(1, 2), 0.25);
  EXPECT_EQ(a.coeff(2, 1), 0.25);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream s("0 1 1\n2 2 1\n");
              read_network(s);
            }),
            2u);
  std::istringstream sized("0 1 1\n");
  EXPECT_EQ(read_network(sized, 5).rows(), 5);
}

TEST(MatrixCsv, ReadsAndRejectsRagged) {
  std::istringstream in("1,2,3\n4, 5 ,6\n");
  const auto m = read_matrix_csv(in);
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 1), 5.0);
  EXPECT_EQ(parse_error_line([] {
              std::istringstream s("1,2\n3\n");
              read_matrix_csv(s);
            }),
            2u);
}

TEST(Spins, RowAndColumnForms) {
  std::istringstream row("1 -1 1 1\n");
  EXPECT_EQ(read_spins(row), SpinVector(std::vector<int>{1, -1, 1, 1}));
  std::istringstream col("1\n-1\n-1\n");
  EXPECT_EQ(read_spins(col), SpinVector(std::vector<int>{1, -1, -1}));
  std::istringstream bad("1 0 1\n");
  EXPECT_EQ(parse_error_line([&] { read_spins(bad); }), 1u);
  std::ostringstream out;
  write_spin_row(out, SpinVector(std::vector<int>{-1, 1}));
  EXPECT_EQ(out.str(), "-1 1\n");
}

TEST(HarnessOutput, HistogramAndPhaseTsv) {
  const auto h = make_histogram({0.0, 1.0, 1.0}, 2);
  std::ostringstream out;
  write_histogram_tsv(out, h);
  EXPECT_EQ(out.str(), "bin_left\tbin_right\tcount\tref_density\n0\t0.5\t1\tnan\n0.5\t1\t2\tnan\n");
  const auto d = phase_diagram(4, {0.2, 0.3}, {-0.1, 0.1}, 2);
  std::ostringstream pd;
  write_phase_diagram_tsv(pd, d);
  const std::string text = pd.str();
  EXPECT_EQ(text.substr(0, 30), "beta\th\tkind\tmaximizers\targmax\n");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
