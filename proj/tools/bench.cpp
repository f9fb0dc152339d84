// SPDX-License-Identifier: Apache-2.0

// Micro-benchmark comparing the OpenMP kernels against their serial references:
// bilinear resize, point-cloud assembly, per-record metric computation.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "forge/image.hpp"
#include "forge/metrics.hpp"
#include "forge/pointcloud.hpp"
#include "forge/rng.hpp"

using namespace forge;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename Fn>
double time_ms(int reps, Fn&& fn) {
  fn();  // warm up
  const auto start = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = clock_type::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(1);

  {
    Image img(1280, 960, 3);
    for (std::uint8_t& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const double serial = time_ms(5, [&] { resize_bilinear_serial(img, 1920, 1440); });
    const double parallel = time_ms(5, [&] { resize_bilinear(img, 1920, 1440); });
    report("resize 1280->1920", serial, parallel);
    if (resize_bilinear(img, 1920, 1440).data != resize_bilinear_serial(img, 1920, 1440).data) {
      std::printf("MISMATCH in resize kernels\n");
      return 1;
    }
  }

  {
    Image img(1600, 1200, 3);
    for (std::uint8_t& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const Intrinsics k{1000, 1000, 800, 600};
    const std::vector<Pixel> grid = grid_pixels({1600, 1200}, 200'000);
    std::vector<double> answers;
    answers.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) answers.push_back(rng.uniform(0.3, 60.0));
    const double serial = time_ms(5, [&] { assemble_serial(img, k, grid, answers); });
    const double parallel = time_ms(5, [&] { assemble(img, k, grid, answers); });
    report("assemble 200k pts", serial, parallel);
  }

  {
    std::vector<SampleRecord> records(2'000'000);
    for (SampleRecord& r : records) {
      r.gt = rng.uniform(0.05, 100.0);
      r.pred = rng.uniform(0.01, 130.0);
    }
    std::vector<SampleRecord> copy = records;
    const double serial =
        time_ms(3, [&] { compute_sample_metrics_serial(copy, Delta1Rule::max_ratio); });
    const double parallel =
        time_ms(3, [&] { compute_sample_metrics(records, Delta1Rule::max_ratio); });
    report("metrics 2M records", serial, parallel);
  }

  return 0;
}
