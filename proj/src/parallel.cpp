#include "hilbert/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hilbert {

namespace {

int initial_threads() {
    int n = 1;
#ifdef _OPENMP
    n = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("HILBERT_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap > 0 && cap < n) n = cap;
        } catch (...) {
        }
    }
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    return n;
}

int& current() {
    static int n = initial_threads();
    return n;
}

} // namespace

int thread_count() { return current(); }

void set_thread_count(int n) {
    if (n < 1) n = 1;
    current() = n;
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

} // namespace hilbert
