#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "tidyfit/csv.hpp"
#include "tidyfit/fixtures.hpp"

using namespace tidyfit;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0 || (std::isnan(a) && std::isnan(b)); }

}  // namespace

TEST_CASE("mtcars fixture reads with model names as row labels") {
  const Frame cars = mtcars();
  CHECK(cars.n_rows() == 32);
  CHECK(cars.n_cols() == 11);
  for (const auto& c : cars.columns()) CHECK(c.is_numeric());
  REQUIRE(cars.row_labels());
  CHECK(cars.row_labels()->at(0) == "Mazda RX4");
  CHECK(cars.row_labels()->at(1) == "Mazda RX4 Wag");
  CHECK(cars.row_labels()->back() == "Volvo 142E");
  CHECK(cars.column("cyl").type() == ColumnType::Integer);
  CHECK(cars.column("mpg").type() == ColumnType::Float);
}

TEST_CASE("type inference") {
  const Frame f = read_csv("i,f,t,b,m\n1,1.5,x,TRUE,1\n2,2,y,false,\n-3,1e3,3,true,NA\n");
  CHECK(f.column("i").type() == ColumnType::Integer);
  CHECK(f.column("f").type() == ColumnType::Float);
  CHECK(f.column("t").type() == ColumnType::Text);
  CHECK(f.column("t").values<std::string>() == std::vector<std::string>{"x", "y", "3"});
  CHECK(f.column("b").type() == ColumnType::Boolean);
  CHECK(f.column("m").type() == ColumnType::Integer);
  CHECK(f.column("m").is_null(1));
  CHECK(f.column("m").is_null(2));
}

TEST_CASE("a non-numeric token forces text") {
  const Frame f = read_csv("v\n1\n2\nx\n");
  CHECK(f.column("v").type() == ColumnType::Text);
  CHECK(f.column("v").values<std::string>() == std::vector<std::string>{"1", "2", "x"});
}

TEST_CASE("header-only input gives zero rows of text columns") {
  const Frame f = read_csv("a,b\n");
  CHECK(f.n_rows() == 0);
  CHECK(f.names() == std::vector<std::string>{"a", "b"});
  CHECK(f.column("a").type() == ColumnType::Text);
}

TEST_CASE("quoting follows RFC 4180") {
  const Frame f = read_csv("name,v\n\"a, b\",1\n\"say \"\"hi\"\"\",2\n\"line\nbreak\",3\n\"7\",4\n");
  CHECK(f.column("name").values<std::string>() ==
        std::vector<std::string>{"a, b", "say \"hi\"", "line\nbreak", "7"});
  const Frame quoted_number = read_csv("v\n\"7\"\n");
  CHECK(quoted_number.column("v").type() == ColumnType::Text);
  CHECK(read_csv("a,b\r\n1,2\r\n").column("b").values<std::int64_t>() == std::vector<std::int64_t>{2});
}

TEST_CASE("read errors") {
  CHECK(kind_of([] { (void)read_csv("a,b\n1\n"); }) == ErrorKind::Parse);
  try {
    (void)read_csv("a,b\n1,2\n1,2,3\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK(kind_of([] { (void)read_csv("a,a\n1,2\n"); }) == ErrorKind::Schema);
  CHECK(kind_of([] { (void)read_csv("a,b\n1,2\n", CsvOptions{.rowname_column = "z"}); }) == ErrorKind::Schema);
  CHECK(kind_of([] { (void)read_csv("a\n\"open\n"); }) == ErrorKind::Parse);
}

TEST_CASE("custom delimiter and no header") {
  const Frame f = read_csv("1;2\n3;4\n", CsvOptions{.delimiter = ';', .header = false});
  CHECK(f.n_cols() == 2);
  CHECK(f.n_rows() == 2);
}

TEST_CASE("write_csv examples") {
  const Frame f({Column::floats("x", {1.0, 0.1}), Column::integers("n", {3, -4})});
  CHECK(write_csv(f) == "x,n\n1.0,3\n0.10000000000000001,-4\n");
  const Frame labelled({Column::floats("x", {2.5})}, Frame::Labels{"row one"});
  CHECK(write_csv(labelled) == ".rownames,x\nrow one,2.5\n");
  CHECK(write_csv(labelled, false) == "x\n2.5\n");
  const Frame empty({Column::floats("x", {}), Column::texts("y", {})});
  CHECK(write_csv(empty) == "x,y\n");
  const Frame tricky({Column::texts("t", {"1", "", "NA", "a,b", "TRUE", "plain"})});
  CHECK(write_csv(tricky) == "t\n\"1\"\n\"\"\n\"NA\"\n\"a,b\"\n\"TRUE\"\nplain\n");
}

TEST_CASE("non-finite floats round-trip") {
  const double inf = std::numeric_limits<double>::infinity();
  const Frame f({Column::floats("x", {inf, -inf, std::nan(""), 1.0})});
  CHECK(write_csv(f) == "x\nInf\n-Inf\nNaN\n1.0\n");
  const Frame back = read_csv(write_csv(f));
  const auto& v = back.column("x").values<double>();
  CHECK(v[0] == inf);
  CHECK(v[1] == -inf);
  CHECK(std::isnan(v[2]));
}

TEST_CASE("jsonl output") {
  const Frame f({Column::texts("term", {"k"}), Column::floats("estimate", {0.1}), Column::booleans("ok", {true}),
                 Column::integers("n", {3})},
                Frame::Labels{"r1"});
  CHECK(write_jsonl(f) == "{\".rownames\":\"r1\",\"term\":\"k\",\"estimate\":0.1,\"ok\":true,\"n\":3}\n");
  const Column nulls("v", std::vector<double>{1.0}, {true});
  CHECK(write_jsonl(Frame({nulls})) == "{\"v\":null}\n");
}

TEST_CASE("property: CSV round-trip is exact") {
  std::mt19937_64 gen(2014);
  std::uniform_int_distribution<int> small(0, 6);
  const std::vector<std::string> words{"alpha", "b c", "d,e", "q\"uote", "1", "NA", "", "TRUE", "x\ny", "-2.5"};
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = gen() % 12;
    std::vector<double> floats(n);
    std::vector<std::int64_t> ints(n);
    std::vector<std::string> texts(n);
    std::vector<bool> bools(n), float_nulls(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = gen();
      double d;
      std::memcpy(&d, &bits, sizeof d);
      if (!std::isfinite(d) || small(gen) == 0) d = std::ldexp(static_cast<double>(gen() % 1000000), small(gen) - 3);
      floats[i] = (gen() % 2) ? d : -d;
      ints[i] = static_cast<std::int64_t>(gen()) >> (gen() % 60);
      texts[i] = words[gen() % words.size()] + (gen() % 2 ? "" : "z");
      bools[i] = gen() % 2;
      float_nulls[i] = small(gen) == 0;
    }
    const bool any_float_null = std::find(float_nulls.begin(), float_nulls.end(), true) != float_nulls.end();
    std::vector<Column> cols{Column("f", floats, any_float_null ? float_nulls : std::vector<bool>{}),
                             Column::integers("i", ints), Column::texts("t", texts), Column::booleans("b", bools)};
    std::optional<Frame::Labels> labels;
    if (gen() % 2) {
      labels.emplace();
      for (std::size_t i = 0; i < n; ++i) labels->push_back("row " + std::to_string(i % 3));
    }
    const Frame f(cols, labels);
    if (n == 0) continue;  // header-only input reads back as text columns
    const Frame back = read_csv(write_csv(f), CsvOptions{.rowname_column = labels ? std::optional<std::string>(".rownames") : std::nullopt});
    REQUIRE(back.names() == f.names());
    CHECK(back.row_labels() == f.row_labels());
    const Column& bf = back.column("f");
    bool all_null = true;
    for (std::size_t i = 0; i < n; ++i) all_null = all_null && float_nulls[i];
    if (!all_null) {
      REQUIRE(bf.type() == ColumnType::Float);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(bf.is_null(i) == static_cast<bool>(float_nulls[i]));
        if (!float_nulls[i]) CHECK(same_bits(bf.values<double>()[i], floats[i]));
      }
    }
    CHECK(back.column("i") == f.column("i"));
    CHECK(back.column("t") == f.column("t"));
    CHECK(back.column("b") == f.column("b"));
  }
}
