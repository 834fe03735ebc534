#include <catch_amalgamated.hpp>

#include <cmath>
#include <regex>

#include "icl/io.hpp"
#include "icl/plot.hpp"

using namespace icl;
using Catch::Matchers::ContainsSubstring;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

std::vector<ErrorCurve> sample_curves() {
  return {{"ols", {{1, 0.9, 0.8, 0.7, 0.95, 100}, {2, 0.5, 0.4, 0.3, 0.6, 100}, {3, 0.1, 1.0 / 3.0, 0.05, 0.4, 100}}},
          {"l1_admm", {{1, 1.2, 1.1, 1.0, 1.3, 100}, {2, 0.6, 0.5, 0.45, 0.55, 100}, {3, 0.2, 0.15, 0.1, 0.25, 100}}}};
}

}  // namespace

TEST_CASE("format_real is shortest round-trip") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(1e-300) == "1e-300");
  Rng r(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::exp(20 * r.normal()) * (r.uniform() < 0.5 ? -1 : 1);
    REQUIRE(std::strtod(format_real(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("curves CSV round trip is exact") {
  const auto curves = sample_curves();
  const std::string csv = curves_csv(curves);
  CHECK(csv.rfind("method,k,mean,median,ci_lo,ci_hi,n\n", 0) == 0);
  CHECK(count(csv, "\n") == 7);
  CHECK(parse_curves_csv(csv) == curves);
  CHECK(curves_csv(parse_curves_csv(csv)) == csv);
}

TEST_CASE("curves CSV errors name the row") {
  CHECK_THROWS_WITH(parse_curves_csv("bad header\n", "f.csv"), ContainsSubstring("f.csv: row 1"));
  CHECK_THROWS_WITH(parse_curves_csv("method,k,mean,median,ci_lo,ci_hi,n\nols,1,2,3\n", "f.csv"),
                    ContainsSubstring("row 2"));
  CHECK_THROWS_WITH(parse_curves_csv("method,k,mean,median,ci_lo,ci_hi,n\nols,1,1,1,1,1,1\nols,x,1,1,1,1,1\n", "f.csv"),
                    ContainsSubstring("row 3"));
  CHECK_THROWS_AS(parse_curves_csv(""), Error);
  CHECK_THROWS_AS(parse_curves_csv("method,k,mean,median,ci_lo,ci_hi,n\nols,1,1,1e999,1,1,1\n"), Error);
}

TEST_CASE("metrics CSV round trip") {
  const std::vector<MetricRow> rows{{0, 5, 11, 4.25}, {100, 5, 11, 0.1 + 0.2}};
  std::string text = metrics_header();
  for (const auto& r : rows) text += metrics_row(r);
  CHECK(parse_metrics_csv(text) == rows);
  CHECK_THROWS_AS(parse_metrics_csv("step,loss\n"), Error);
}

TEST_CASE("svg has one series per curve and a legend entry per method") {
  const auto curves = sample_curves();
  const std::string svg = render_svg(curves);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "<polyline class=\"series\"") == 2);
  CHECK(count(svg, "<polygon class=\"band\"") == 2);
  CHECK(count(svg, "class=\"legend-entry\"") == 2);
  CHECK_THAT(svg, ContainsSubstring(">ols</text>") && ContainsSubstring(">l1_admm</text>"));
  CHECK(svg == render_svg(curves));

  PlotOptions mean;
  mean.use_median = false;
  const std::string m = render_svg(curves, mean);
  CHECK(count(m, "<polygon class=\"band\"") == 0);
  CHECK(count(m, "<polyline class=\"series\"") == 2);
}

TEST_CASE("series coordinates stay inside the plot area") {
  const std::string svg = render_svg(sample_curves());
  const std::regex pts("class=\"series\" points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), pts); it != std::sregex_iterator(); ++it) {
    std::istringstream in((*it)[1].str());
    std::string pair;
    std::size_t n = 0;
    while (in >> pair) {
      const double x = std::stod(pair.substr(0, pair.find(',')));
      const double y = std::stod(pair.substr(pair.find(',') + 1));
      CHECK(x >= 80.0);
      CHECK(x <= 720.0 - 170.0 + 1e-9);
      CHECK(y >= 40.0);
      CHECK(y <= 480.0 - 60.0 + 1e-9);
      ++n;
    }
    CHECK(n == 3);
  }
}

TEST_CASE("log scale is chosen for wide positive ranges") {
  std::vector<ErrorCurve> wide{{"ols", {{1, 1000, 1000, 900, 1100, 10}, {2, 0.5, 0.5, 0.4, 0.6, 10}}}};
  CHECK_THAT(render_svg(wide), ContainsSubstring("(log scale)"));
  PlotOptions lin;
  lin.scale = YScale::linear;
  CHECK_THAT(render_svg(wide, lin), !ContainsSubstring("(log scale)"));
  CHECK_THAT(render_svg(sample_curves()), !ContainsSubstring("(log scale)"));
}

TEST_CASE("svg escapes text and rejects bad input") {
  PlotOptions o;
  o.title = "a<b & \"c\"";
  CHECK_THAT(render_svg(sample_curves(), o), ContainsSubstring("a&lt;b &amp; &quot;c&quot;"));
  CHECK_THROWS_AS(render_svg({}), InvalidInput);
  CHECK_THROWS_AS(render_svg({{"x", {}}}), InvalidInput);
  CHECK_THROWS_AS(render_svg({{"x", {{1, NAN, NAN, NAN, NAN, 1}}}}), InvalidInput);
  CHECK_NOTHROW(render_svg({{"single", {{4, 1.0, 1.0, 1.0, 1.0, 1}}}}));
}
