#pragma once

#include <benchmark/benchmark.h>

#include "faor/allocator.hpp"

#define FAOR_BENCHMARK_MAIN()                                \
  int main(int argc, char** argv) {                          \
    faor::tune_allocator();                                  \
    ::benchmark::Initialize(&argc, argv);                    \
    if (::benchmark::ReportUnrecognizedArguments(argc, argv)) \
      return 1;                                              \
    ::benchmark::RunSpecifiedBenchmarks();                   \
    ::benchmark::Shutdown();                                 \
    return 0;                                                \
  }
