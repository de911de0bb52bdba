#include <catch2/catch_amalgamated.hpp>

#include "mmplan/io.hpp"
#include "mmplan/platform.hpp"

using namespace mmplan;

TEST_CASE("vck190 fixture values") {
  const PlatformSpec p = vck190();
  CHECK(p.aie_total == 400);
  CHECK(p.aie_freq_hz == 1e9);
  CHECK(p.bw.bw_total == 25.6e9);
  CHECK(p.ram_bytes == 19627520);
  CHECK(p.mac_per_cycle == 8);
  CHECK(p.eff == 0.8);
  // Uncalibrated default: a quarter of peak per stream.
  CHECK(p.bw.bw_l == 6.4e9);
  CHECK(p.bw.bw_r == 6.4e9);
  CHECK(p.bw.bw_o == 6.4e9);
}

TEST_CASE("platform invariants reject boundary violations") {
  PlatformSpec p = vck190();
  p.eff = 0.0;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("eff"));
  p = vck190();
  p.bw.bw_l = p.bw.bw_total * 2;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = vck190();
  p.aie_total = 0;
  CHECK_THROWS_AS(validate(p), ValidationError);
}

TEST_CASE("scale_platform scales bandwidth and tiles with floors") {
  const PlatformSpec base = vck190();
  const PlatformSpec hbm = scale_platform(base, 1, 1, 16);
  CHECK(hbm.bw.bw_total == 409.6e9);
  CHECK(hbm.aie_total == 400);
  CHECK(hbm.ram_bytes == base.ram_bytes);

  const PlatformSpec eighth = scale_platform(base, 1.0 / 8, 1, 1);
  CHECK(eighth.aie_total == 50);

  const PlatformSpec same = scale_platform(base, 1, 1, 1);
  CHECK(same.aie_total == base.aie_total);
  CHECK(same.bw == base.bw);
  CHECK(same.name == base.name);

  CHECK(hbm.name != base.name);
  CHECK_THROWS_AS(scale_platform(base, 0, 1, 1), ValidationError);
}

TEST_CASE("reciprocal scaling returns counts within rounding") {
  const PlatformSpec base = vck190();
  for (double s : {2.0, 3.0, 8.0, 10.0}) {
    const PlatformSpec down = scale_platform(base, 1.0 / s, 1.0 / s, 1.0 / s);
    const PlatformSpec back = scale_platform(down, s, s, s);
    CHECK(std::abs(back.aie_total - base.aie_total) <= static_cast<int>(s));
    CHECK(std::abs(back.ram_bytes - base.ram_bytes) <= static_cast<std::int64_t>(s));
    CHECK(back.bw.bw_total == Catch::Approx(base.bw.bw_total).epsilon(1e-12));
  }
}

TEST_CASE("platform files load, default, and reject unknown fields") {
  const std::string doc = save_platform(vck190(), "fixture");
  const PlatformSpec p = load_platform(doc);
  CHECK(p == vck190());

  // plio and per-stream bandwidths are defaultable.
  const PlatformSpec d = load_platform(R"({
    "name": "mini", "aie_total": 16, "ram_bytes": 1048576,
    "aie_freq_hz": 1e9, "mac_per_cycle": 4, "eff": 0.5,
    "bw": {"bw_total": 8e9}})");
  CHECK(d.plio_in == 128);
  CHECK(d.plio_out == 128);
  CHECK(d.bw.bw_l == 2e9);

  CHECK_THROWS_WITH(load_platform(R"({"name":"x","aie_total":1,"ram_bytes":1,
    "aie_freq_hz":1,"mac_per_cycle":1,"eff":1,"bw":{"bw_total":1},"rammm":3})"),
                    Catch::Matchers::ContainsSubstring("rammm"));
  CHECK_THROWS_AS(load_platform("not json"), ParseError);
  CHECK_THROWS_WITH(load_platform(R"({"name":"x","aie_total":1,"ram_bytes":1,
    "aie_freq_hz":1,"mac_per_cycle":1,"eff":0,"bw":{"bw_total":1}})"),
                    Catch::Matchers::ContainsSubstring("eff"));
}
