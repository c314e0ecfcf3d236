#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gct/config.hpp"
#include "gct/error.hpp"
#include "gct/io.hpp"

using namespace gct;

TEST_CASE("float formatting") {
  CHECK(format_float(std::nan("")) == "");
  CHECK(format_float(0.5) == "0.5");
  CHECK(format_float(1.0 / 3.0) == "0.333333333");
  CHECK(std::isnan(parse_float("")));
  CHECK(parse_float("2.5e-3") == 0.0025);
  CHECK_THROWS_AS(parse_float("abc"), IoError);
  for (double x : {1.0 / 7.0, 123456.789012, -2.718281828459045e-12, 6.02214076e23}) {
    const double back = parse_float(format_float(x));
    CHECK(std::abs(back - x) <= 5e-9 * std::abs(x));
    CHECK(format_float(back) == format_float(x));
  }
}

TEST_CASE("csv round trip") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows = {{"1", "x,y", "he said \"hi\""}, {"", "line\nbreak", "3"}};
  const std::string text = to_csv(t);
  CHECK(text.find('\r') == std::string::npos);
  const CsvTable back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("c") == 2);
  CHECK_THROWS_AS(back.column("zzz"), IoError);

  CsvTable empty;
  empty.header = {"gamma", "beta"};
  CHECK(to_csv(empty) == "gamma,beta\n");
}

TEST_CASE("file io errors carry the path") {
  const std::string bad = "/nonexistent-dir/x.csv";
  try {
    write_text(bad, "x");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(bad) != std::string::npos);
  }
  CHECK_THROWS_AS(read_text(bad), IoError);

  const auto path = (std::filesystem::temp_directory_path() / "gct_io_test.csv").string();
  CsvTable t;
  t.header = {"x"};
  t.rows = {{"1"}};
  write_csv(path, t);
  CHECK(read_csv(path).rows == t.rows);
  std::filesystem::remove(path);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"({"schema": 1, "mode": "simulate", "n": 2000, "gamma": [0.5],
      "m": 11, "lambda": [1.2, 1.5], "kernel": "soft:t=2", "trials": 3, "base_seed": 9})");
  CHECK(c.mode == Mode::simulate);
  CHECK(c.n == std::vector<int>{2000});
  CHECK(c.gamma == std::vector<double>{0.5});
  CHECK(c.lambda.size() == 2);
  CHECK(c.kernels == std::vector<std::string>{"soft:t=2"});
  CHECK(c.base_seed == 9);

  const ExperimentConfig again = parse_config(config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));

  CHECK_THROWS_AS(parse_config(R"({"mode": "simulate"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "bogus": 1, "p": 10, "m": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "p": 10, "gamma": 0.5, "m": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "p": 10, "m": 2, "trials": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "p": 10, "m": 2, "kernel": "soft"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "p": 10, "m": 2, "eps_exponent": 0.6})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "p": 10, "m": 2, "kernel": "adaptive"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "mode": "theory-curve", "gamma": 0.5})"), ConfigError);
  CHECK_NOTHROW(parse_config(R"({"schema": 1, "mode": "theory-curve", "gamma": 0.5, "beta": [0.25, 1]})"));
  CHECK_THROWS_AS(load_config("/nonexistent.json"), IoError);
}
