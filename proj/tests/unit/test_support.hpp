#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "tesspec/simulate.hpp"
#include "tesspec/trace.hpp"
#include "tesspec/units.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tesspec_test_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline tesspec::TraceRecord make_record(const std::vector<double>& samples,
                                        const tesspec::GateConfig& gate = {}) {
  tesspec::TraceRecord r;
  r.samples.assign(samples.begin(), samples.end());
  r.sample_interval = gate.sample_interval();
  r.trigger_index = gate.trigger_index;
  return r;
}

// Noiseless pulse of the given energy on the default grid.
inline tesspec::TraceRecord pulse_record(double energy_ev, const tesspec::sim::PulseShape& shape = {},
                                         const tesspec::GateConfig& gate = {}) {
  return make_record(tesspec::sim::synth_pulse(tesspec::Energy(energy_ev), shape, gate), gate);
}

}  // namespace testing
