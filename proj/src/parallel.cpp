#include "tauh2/parallel.hpp"

#include <cstdlib>

#include <omp.h>

namespace tauh2 {

int worker_count() {
    if (const char* env = std::getenv("DDAE_H2_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

void configure_workers_from_env() {
    if (const char* env = std::getenv("DDAE_H2_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

}  // namespace tauh2
