#include <doctest.h>

#include <cmath>

#include "filco/perfmodel.hpp"
#include "filco/stage1.hpp"

using namespace filco;
using namespace filco::perf;

namespace {

HardwareConfig hw_default() { return default_vck190(); }

ExecMode first_mode(const LayerNode& layer, const HardwareConfig& hw) {
  auto modes = stage1::enumerate_modes(layer, hw);
  return modes.front().geom;
}

ExecMode best_mode(const LayerNode& layer, const HardwareConfig& hw) {
  auto modes = stage1::enumerate_modes(layer, hw);
  const stage1::CandidateMode* best = &modes.front();
  for (const auto& m : modes)
    if (m.latency_s < best->latency_s) best = &m;
  return best->geom;
}

}  // namespace

TEST_CASE("flexible kernel cycles follow the three-deep loop formula") {
  AieCycleParams p{8.0, 16, 2, 100};
  CHECK(aie_kernel_cycles_flexible({16, 4, 4}, p) == 4356);
  // 100 + 16*(2 + 4*(2 + 4*16)) = 4356
}

TEST_CASE("single atom with zero overheads costs exactly c_atom") {
  AieCycleParams p{8.0, 16, 0, 0};
  CHECK(aie_kernel_cycles_flexible({1, 1, 1}, p) == 16);
}

TEST_CASE("kernel cycles strictly increase with any atom count") {
  AieCycleParams p = hw_default().aie_cycle_model;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    TileShape t{rng.next_range(1, 15), rng.next_range(1, 3), rng.next_range(1, 3)};
    i64 base = aie_kernel_cycles_flexible(t, p);
    CHECK(aie_kernel_cycles_flexible({t.ai + 1, t.ak, t.aj}, p) > base);
    CHECK(aie_kernel_cycles_flexible({t.ai, t.ak + 1, t.aj}, p) > base);
    CHECK(aie_kernel_cycles_flexible({t.ai, t.ak, t.aj + 1}, p) > base);
  }
}

TEST_CASE("static kernel pays the max-tile cost; padding bounds efficiency") {
  AieCycleParams p = hw_default().aie_cycle_model;
  TileShape max_tile{16, 4, 4};
  double eff = aie_efficiency(KernelMode::fixed, 8, 24, 16, p, max_tile);
  CHECK(eff <= 8.0 * 24 * 16 / (32.0 * 32 * 32));  // 9.375% volume bound
  CHECK(eff > 0);
}

TEST_CASE("flexible never costs more than static for any admissible tile") {
  AieCycleParams p = hw_default().aie_cycle_model;
  TileShape max_tile{16, 4, 4};
  for (i64 ai = 1; ai <= 16; ++ai)
    for (i64 ak = 1; ak <= 4; ++ak)
      for (i64 aj = 1; aj <= 4; ++aj) {
        TileShape t{ai, ak, aj};
        CHECK(aie_kernel_cycles_flexible(t, p) <=
              aie_kernel_cycles_static(t, p, max_tile));
      }
}

TEST_CASE("efficiency stays in (0, 1]") {
  AieCycleParams p = hw_default().aie_cycle_model;
  TileShape max_tile{16, 4, 4};
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    i64 m = rng.next_range(1, 32), k = rng.next_range(1, 32), n = rng.next_range(1, 32);
    double e = aie_efficiency(KernelMode::flexible, m, k, n, p, max_tile);
    CHECK(e > 0);
    CHECK(e <= 1.0 + 1e-12);
  }
}

TEST_CASE("oversized tile rejected by the kernel model") {
  AieCycleParams p = hw_default().aie_cycle_model;
  CHECK_THROWS_AS(aie_kernel_cycles_static({17, 4, 4}, p, {16, 4, 4}), ModelError);
}

TEST_CASE("layer latency: infinite bandwidth collapses to pure compute") {
  HardwareConfig hw = hw_default();
  hw.ddr.peak_bytes_per_sec = 1e18;
  hw.ddr.burst_efficiency = {{1, 1.0}};
  hw.stream_bytes_per_cycle = i64{1} << 40;
  LayerNode layer{0, 96, 96, 96, Dtype::f32, "L"};
  ExecMode mode = first_mode(layer, hw);
  LatencyBreakdown lb = layer_latency(layer, mode, hw);
  CHECK(lb.t_total == doctest::Approx(lb.t_compute).epsilon(1e-9));
}

TEST_CASE("layer latency: compute-bound total within one round of the kernel sum") {
  HardwareConfig hw = hw_default();
  hw.ddr.peak_bytes_per_sec = 1e15;
  hw.stream_bytes_per_cycle = 1 << 20;
  LayerNode layer{0, 128, 256, 128, Dtype::f32, "L"};
  ExecMode mode = best_mode(layer, hw);
  LatencyBreakdown lb = layer_latency(layer, mode, hw);
  REQUIRE(lb.rounds > 0);
  double per_round = lb.t_compute / static_cast<double>(lb.rounds);
  CHECK(lb.t_total >= lb.t_compute);
  CHECK(lb.t_total <= lb.t_compute + 2 * per_round + 1e-9);
}

TEST_CASE("layer latency invariants: total covers each phase") {
  HardwareConfig hw = hw_default();
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    LayerNode layer{0, rng.next_range(1, 300), rng.next_range(1, 300),
                    rng.next_range(1, 300), Dtype::f32, "L"};
    ExecMode mode = first_mode(layer, hw);
    LatencyBreakdown lb = layer_latency(layer, mode, hw);
    CHECK(lb.t_total >= lb.t_compute - 1e-12);
    CHECK(lb.t_total >= lb.t_load - 1e-12);
    CHECK(lb.t_total >= lb.t_store - 1e-12);
    CHECK(lb.utilization > 0);
    CHECK(lb.utilization <= 1.0 + 1e-9);
  }
}

TEST_CASE("best-mode latency is monotone in layer dims") {
  HardwareConfig hw = hw_default();
  auto best_latency = [&](i64 m, i64 k, i64 n) {
    LayerNode layer{0, m, k, n, Dtype::f32, "L"};
    auto modes = stage1::enumerate_modes(layer, hw);
    double best = 1e300;
    for (const auto& md : modes) best = std::min(best, md.latency_s);
    return best;
  };
  double base = best_latency(64, 64, 64);
  CHECK(best_latency(128, 64, 64) >= base - 1e-15);
  CHECK(best_latency(64, 128, 64) >= base - 1e-15);
  CHECK(best_latency(64, 64, 128) >= base - 1e-15);
}

TEST_CASE("baseline equals the native model on the identical tiling") {
  HardwareConfig hw = hw_default();
  std::array<i64, 3> fixed{256, 256, 128};
  LayerNode layer{0, 256, 256, 128, Dtype::f32, "L"};  // exact multiples
  LatencyBreakdown charm = baseline_latency_charm(layer, fixed, hw);
  ExecMode same = charm_mode(layer, fixed, hw);
  LatencyBreakdown native = layer_latency(layer, same, hw);
  CHECK(charm.t_total == doctest::Approx(native.t_total).epsilon(1e-12));
}

TEST_CASE("charm padding inflates executed volume by the volume ratio") {
  // (4096/256)^3 = 4096x more padded ops
  LayerNode layer{0, 256, 256, 256, Dtype::f32, "L"};
  LayerNode padded = pad_layer_to(layer, 4096, 4096, 4096);
  CHECK(padded.ops() / layer.ops() == 4096);
}

TEST_CASE("baselines never beat the best native mode") {
  HardwareConfig hw = hw_default();
  std::array<i64, 3> charm_tile{256, 256, 128};
  std::array<i64, 2> rsn_unit{128, 128};
  Rng rng(5);
  for (int i = 0; i < 8; ++i) {
    LayerNode layer{0, rng.next_range(1, 40) * 8, rng.next_range(1, 40) * 8,
                    rng.next_range(1, 40) * 8, Dtype::f32, "L"};
    auto modes = stage1::enumerate_modes(layer, hw);
    double best = 1e300;
    for (const auto& md : modes) best = std::min(best, md.latency_s);
    CHECK(baseline_latency_charm(layer, charm_tile, hw).t_total >= best - 1e-12);
    CHECK(baseline_latency_rsn(layer, rsn_unit, hw.cu_buf_tile, hw).t_total >=
          best - 1e-12);
  }
}

TEST_CASE("flexible efficiency band over the paper sweep") {
  HardwareConfig hw = hw_default();
  const AieCycleParams& p = hw.aie_cycle_model;
  TileShape max_tile{16, 4, 4};
  double lo = 1e9, hi = 0;
  for (i64 m = 14; m <= 32; m += 2)
    for (i64 k = 24; k <= 32; k += 8)
      for (i64 n = 16; n <= 32; n += 8) {
        double e = aie_efficiency(KernelMode::flexible, m, k, n, p, max_tile);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
      }
  CHECK(hi - lo <= 0.05);
  double ops_lo = 14.0 * 24 * 16, ops_hi = 32.0 * 32 * 32;
  CHECK(ops_hi / ops_lo >= 6.0);
  CHECK(aie_efficiency(KernelMode::fixed, 14, 24, 16, p, max_tile) < 0.20);
}
