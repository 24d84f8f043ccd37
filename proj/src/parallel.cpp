#include "svpde/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svpde {

void set_threads(int n) {
#ifdef _OPENMP
    static const int runtime_default = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : runtime_default);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace svpde
