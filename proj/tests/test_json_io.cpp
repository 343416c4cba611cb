#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "fsk/json_io.hpp"
#include "support/desk_models.hpp"

using namespace fsk;
using Md = Matrix<double>;

TEST_CASE("format_double round-trips doubles exactly") {
  const double values[] = {0.0,    1.0,       0.1,   -0.56, 1.0 / 3.0,
                           1e-15,  -2.5e300,  1e300, 0.27,  5e-324,
                           123456789.123456789};
  for (double v : values) {
    // strtod rather than std::stod: the latter throws on subnormal results
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("format_double rejects non-finite values") {
  CHECK_THROWS_AS(format_double(std::numeric_limits<double>::quiet_NaN()),
                  NumericalIntegrity);
  CHECK_THROWS_AS(format_double(std::numeric_limits<double>::infinity()),
                  NumericalIntegrity);
}

TEST_CASE("model JSON round trip is bit exact") {
  const auto m = random_model(9, 3, true, 77);
  const auto parsed = parse_model_json(model_to_json(m));
  CHECK(parsed.lambda == m.lambda);
  CHECK(parsed.phi.m() == m.phi.m());
  CHECK(parsed.psi2 == m.psi2);
}

TEST_CASE("model parsing is strict about the schema") {
  const std::string good = model_to_json(testing::spearman());

  SUBCASE("unknown keys are rejected") {
    std::string bad = good;
    bad.insert(bad.find('{') + 1, "\n  \"extra\": 1,");
    CHECK_THROWS_AS(parse_model_json(bad), ParseError);
  }
  SUBCASE("missing keys are rejected") {
    CHECK_THROWS_AS(parse_model_json("{\"p\": 3, \"q\": 1}"), ParseError);
  }
  SUBCASE("malformed JSON is rejected") {
    CHECK_THROWS_AS(parse_model_json("{\"p\": 3,"), ParseError);
  }
  SUBCASE("non-object top level is rejected") {
    CHECK_THROWS_AS(parse_model_json("[1, 2, 3]"), ParseError);
  }
  SUBCASE("row count must match p") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3, "q": 1, "lambda": [[0.8], [0.7]], "phi": [[1.0]], "psi2": [0.4, 0.4, 0.4]})"),
        ParseError);
  }
  SUBCASE("column count must match q") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3, "q": 1, "lambda": [[0.8, 0.1], [0.7], [0.6]], "phi": [[1.0]], "psi2": [0.4, 0.4, 0.4]})"),
        ParseError);
  }
  SUBCASE("non-numeric entries are rejected") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3, "q": 1, "lambda": [[0.8], ["x"], [0.6]], "phi": [[1.0]], "psi2": [0.4, 0.4, 0.4]})"),
        ParseError);
  }
  SUBCASE("non-finite entries are rejected") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3, "q": 1, "lambda": [[0.8], [1e999], [0.6]], "phi": [[1.0]], "psi2": [0.4, 0.4, 0.4]})"),
        ParseError);
  }
  SUBCASE("counts must be positive integers") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 0, "q": 1, "lambda": [], "phi": [[1.0]], "psi2": []})"),
        ParseError);
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3.5, "q": 1, "lambda": [[0.8]], "phi": [[1.0]], "psi2": [0.4]})"),
        ParseError);
  }
  SUBCASE("asymmetric phi is a model defect, not a parse failure") {
    CHECK_THROWS_AS(
        parse_model_json(
            R"({"p": 3, "q": 2, "lambda": [[0.8, 0.0], [0.0, 0.7], [0.0, 0.6]],
                "phi": [[1.0, 0.4], [0.1, 1.0]], "psi2": [0.4, 0.4, 0.4]})"),
        InvalidModel);
  }
}

TEST_CASE("JsonWriter renders objects per line and arrays inline") {
  JsonWriter w;
  w.begin_object();
  w.key("name").value("fsk");
  w.key("n").value(3);
  w.key("ok").value(true);
  w.key("nothing").null_value();
  Md m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  w.key("m").value(m);
  w.end_object();
  CHECK(w.str() ==
        "{\n"
        "  \"name\": \"fsk\",\n"
        "  \"n\": 3,\n"
        "  \"ok\": true,\n"
        "  \"nothing\": null,\n"
        "  \"m\": [[1, 0.5], [0.5, 1]]\n"
        "}\n");
}

TEST_CASE("JsonWriter escapes strings") {
  JsonWriter w;
  w.begin_object();
  w.key("s").value("a\"b\\c\nd");
  w.end_object();
  CHECK(w.str() == "{\n  \"s\": \"a\\\"b\\\\c\\nd\"\n}\n");
}

TEST_CASE("documents are deterministic") {
  const auto m = testing::model_b();
  const auto d1 = document_validate(validate(m), "");
  const auto d2 = document_validate(validate(m), "");
  CHECK(d1 == d2);
  CHECK(d1.find("\"schema_version\": 1") != std::string::npos);
  CHECK(d1.find("\"valid\": true") != std::string::npos);
}

TEST_CASE("load_model_file reports missing files as parse errors") {
  CHECK_THROWS_AS(load_model_file("/nonexistent/path.json"), ParseError);
}
