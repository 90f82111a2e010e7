#include <doctest.h>

#include "filco/arch.hpp"

using namespace filco;

TEST_CASE("vck190 defaults pin the published clocks and tile") {
  HardwareConfig hw = default_vck190();
  CHECK(hw.f_aie_hz == doctest::Approx(1e9));
  CHECK(hw.f_pl_hz == doctest::Approx(150e6));
  CHECK(hw.cu_buf_tile == std::array<i64, 3>{32, 32, 32});
  CHECK(hw.fmu_capacity_elems == 65536);
}

TEST_CASE("zero unit counts rejected") {
  HardwareConfig hw = default_vck190();
  hw.aie_per_cu = 0;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
  hw = default_vck190();
  hw.n_fmu = 0;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("capacity admits equal-size views of different shape") {
  HardwareConfig hw = default_vck190();
  CHECK(256 * 256 <= hw.fmu_capacity_elems);
  CHECK(128 * 512 <= hw.fmu_capacity_elems);
}

TEST_CASE("config serialization round-trips") {
  HardwareConfig hw = default_vck190();
  hw.n_cu = 5;
  hw.ddr.peak_bytes_per_sec = 12.8e9;
  HardwareConfig back = load_config(serialize(hw));
  CHECK(serialize(back) == serialize(hw));
  CHECK(back.n_cu == 5);
}

TEST_CASE("effective bandwidth is monotone and capped at peak") {
  DdrProfile ddr = default_vck190().ddr;
  double prev = 0;
  for (i64 b = 1; b <= (1 << 20); b *= 2) {
    double bw = ddr.effective_bandwidth(b);
    CHECK(bw >= prev);
    CHECK(bw <= ddr.peak_bytes_per_sec * (1 + 1e-12));
    prev = bw;
  }
}

TEST_CASE("non-monotone burst table rejected") {
  HardwareConfig hw = default_vck190();
  hw.ddr.burst_efficiency = {{64, 0.9}, {256, 0.5}};
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("misaligned cu_buf_tile rejected") {
  HardwareConfig hw = default_vck190();
  hw.cu_buf_tile = {32, 30, 32};
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("c_atom below the atom peak bound rejected") {
  HardwareConfig hw = default_vck190();
  hw.aie_cycle_model.c_atom = 8;  // 2*8*8/8 = 16 is the floor
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("bad config text reports parse error") {
  CHECK_THROWS_AS(load_config("{"), ParseError);
  CHECK_THROWS_AS(load_config(R"({"aie_per_cu": 0})"), ConfigError);
}
