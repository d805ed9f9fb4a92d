#pragma once

namespace dmk::parallel {

enum class Backend { serial, openmp };

// Process-wide kernel dispatch. Both backends produce bit-identical
// results (every parallel loop owns its output elements and keeps the
// serial summation order), so this only affects speed.
void set_backend(Backend b);
Backend backend();

// Worker count for the openmp backend. Default 1.
void set_threads(int n);
int threads();

// True when the openmp backend with >1 threads is active.
bool use_openmp();

}  // namespace dmk::parallel
