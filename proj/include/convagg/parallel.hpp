#pragma once

#include <cstddef>
#include <cstdint>

#include <omp.h>

namespace convagg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable stream seed for a tuple of integers. Order of arguments matters.
template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Rest... rest) {
  std::uint64_t h = mix64(seed);
  ((h = mix64(h ^ static_cast<std::uint64_t>(rest))), ...);
  return h;
}

/// jobs <= 0 means "all available threads".
inline int resolve_jobs(int jobs) {
  return jobs > 0 ? jobs : omp_get_max_threads();
}

/// Runs body(i) for i in [0, count). With jobs == 1 this is a plain loop and
/// serves as the serial reference; otherwise iterations are distributed over
/// an OpenMP team. Bodies must write only to slot i of their outputs.
template <typename Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
  const int threads = resolve_jobs(jobs);
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace convagg
