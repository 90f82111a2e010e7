#include "filco/arch.hpp"

#include <json.hpp>

namespace filco {

using nlohmann::ordered_json;

double DdrProfile::effective_fraction(i64 burst_bytes) const {
  if (burst_efficiency.empty()) return 1.0;
  // step function: largest key <= burst; below the smallest key, the
  // smallest entry applies
  auto it = burst_efficiency.upper_bound(burst_bytes);
  if (it == burst_efficiency.begin()) return it->second;
  return std::prev(it)->second;
}

double DdrProfile::effective_bandwidth(i64 burst_bytes) const {
  return peak_bytes_per_sec * effective_fraction(burst_bytes);
}

void DdrProfile::validate() const {
  if (peak_bytes_per_sec <= 0)
    throw ConfigError("ddr.peak_bytes_per_sec must be positive");
  double prev = 0;
  for (const auto& [burst, frac] : burst_efficiency) {
    if (burst <= 0) throw ConfigError("ddr.burst_efficiency: burst length must be positive");
    if (frac <= 0 || frac > 1.0)
      throw ConfigError("ddr.burst_efficiency: fractions must be in (0,1]");
    if (frac < prev)
      throw ConfigError("ddr.burst_efficiency must be monotone nondecreasing");
    prev = frac;
  }
}

void AieCycleParams::validate() const {
  if (macs_per_cycle <= 0) throw ConfigError("aie.macs_per_cycle must be positive");
  if (c_atom < 0 || c_loop < 0 || c_setup < 0)
    throw ConfigError("aie cycle parameters must be nonnegative");
  const double min_atom = (kAtomM * kAtomK * kAtomN) / macs_per_cycle;
  if (static_cast<double>(c_atom) < min_atom)
    throw ConfigError("aie.c_atom below the 2x8x8 peak-rate bound");
}

void HardwareConfig::validate() const {
  if (n_fmu < 1) throw ConfigError("n_fmu must be >= 1");
  if (n_cu < 1) throw ConfigError("n_cu must be >= 1");
  if (aie_per_cu < 1) throw ConfigError("aie_per_cu must be >= 1");
  if (fmu_capacity_elems < 1) throw ConfigError("fmu_capacity_elems must be >= 1");
  if (cu_buf_tile[0] % kAtomM || cu_buf_tile[1] % kAtomK || cu_buf_tile[2] % kAtomN)
    throw ConfigError("cu_buf_tile dims must be multiples of the 2x8x8 atom");
  if (cu_buf_tile[0] < kAtomM || cu_buf_tile[1] < kAtomK || cu_buf_tile[2] < kAtomN)
    throw ConfigError("cu_buf_tile dims must cover at least one atom");
  if (fmu_capacity_elems < cu_buf_tile[0] * cu_buf_tile[1])
    throw ConfigError("fmu_capacity_elems smaller than the largest tile view");
  if (f_pl_hz <= 0 || f_aie_hz <= 0) throw ConfigError("clock frequencies must be positive");
  if (stream_bytes_per_cycle < 1) throw ConfigError("stream_bytes_per_cycle must be >= 1");
  ddr.validate();
  aie_cycle_model.validate();
}

HardwareConfig default_vck190() {
  HardwareConfig hw;
  hw.n_fmu = 8;
  hw.n_cu = 8;
  hw.aie_per_cu = 4;
  hw.fmu_capacity_elems = 65536;
  hw.cu_buf_tile = {32, 32, 32};
  hw.f_pl_hz = 150e6;
  hw.f_aie_hz = 1e9;
  hw.stream_bytes_per_cycle = 16;
  hw.ddr.peak_bytes_per_sec = 25.6e9;
  hw.ddr.burst_efficiency = {{64, 0.30},   {256, 0.55},  {1024, 0.80},
                             {4096, 0.92}, {16384, 0.97}, {65536, 1.0}};
  // Calibrated so the flexible-kernel efficiency stays within a 5-point
  // band over the 14x24x16..32x32x32 sweep; see docs/model.md.
  hw.aie_cycle_model = {8.0, 16, 2, 16};
  hw.validate();
  return hw;
}

HardwareConfig load_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config file: ") + e.what());
  }
  HardwareConfig hw = default_vck190();
  try {
    if (j.contains("n_fmu")) hw.n_fmu = j["n_fmu"].get<int>();
    if (j.contains("n_cu")) hw.n_cu = j["n_cu"].get<int>();
    if (j.contains("aie_per_cu")) hw.aie_per_cu = j["aie_per_cu"].get<int>();
    if (j.contains("fmu_capacity_elems"))
      hw.fmu_capacity_elems = j["fmu_capacity_elems"].get<i64>();
    if (j.contains("cu_buf_tile")) {
      auto t = j["cu_buf_tile"];
      hw.cu_buf_tile = {t.at(0).get<i64>(), t.at(1).get<i64>(), t.at(2).get<i64>()};
    }
    if (j.contains("f_pl_hz")) hw.f_pl_hz = j["f_pl_hz"].get<double>();
    if (j.contains("f_aie_hz")) hw.f_aie_hz = j["f_aie_hz"].get<double>();
    if (j.contains("stream_bytes_per_cycle"))
      hw.stream_bytes_per_cycle = j["stream_bytes_per_cycle"].get<i64>();
    if (j.contains("ddr")) {
      const auto& jd = j["ddr"];
      if (jd.contains("peak_bytes_per_sec"))
        hw.ddr.peak_bytes_per_sec = jd["peak_bytes_per_sec"].get<double>();
      if (jd.contains("burst_efficiency")) {
        hw.ddr.burst_efficiency.clear();
        for (const auto& [k, v] : jd["burst_efficiency"].items())
          hw.ddr.burst_efficiency[std::stoll(k)] = v.get<double>();
      }
    }
    if (j.contains("aie")) {
      const auto& ja = j["aie"];
      if (ja.contains("macs_per_cycle"))
        hw.aie_cycle_model.macs_per_cycle = ja["macs_per_cycle"].get<double>();
      if (ja.contains("c_atom")) hw.aie_cycle_model.c_atom = ja["c_atom"].get<i64>();
      if (ja.contains("c_loop")) hw.aie_cycle_model.c_loop = ja["c_loop"].get<i64>();
      if (ja.contains("c_setup")) hw.aie_cycle_model.c_setup = ja["c_setup"].get<i64>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config file: ") + e.what());
  }
  hw.validate();
  return hw;
}

std::string serialize(const HardwareConfig& hw) {
  ordered_json j;
  j["n_fmu"] = hw.n_fmu;
  j["n_cu"] = hw.n_cu;
  j["aie_per_cu"] = hw.aie_per_cu;
  j["fmu_capacity_elems"] = hw.fmu_capacity_elems;
  j["cu_buf_tile"] = hw.cu_buf_tile;
  j["f_pl_hz"] = hw.f_pl_hz;
  j["f_aie_hz"] = hw.f_aie_hz;
  j["stream_bytes_per_cycle"] = hw.stream_bytes_per_cycle;
  ordered_json jd;
  jd["peak_bytes_per_sec"] = hw.ddr.peak_bytes_per_sec;
  ordered_json jb;
  for (const auto& [k, v] : hw.ddr.burst_efficiency) jb[std::to_string(k)] = v;
  jd["burst_efficiency"] = jb;
  j["ddr"] = jd;
  j["aie"] = {{"macs_per_cycle", hw.aie_cycle_model.macs_per_cycle},
              {"c_atom", hw.aie_cycle_model.c_atom},
              {"c_loop", hw.aie_cycle_model.c_loop},
              {"c_setup", hw.aie_cycle_model.c_setup}};
  return j.dump(2) + "\n";
}

}  // namespace filco
