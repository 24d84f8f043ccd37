#pragma once

namespace svpde {

/// Worker count used by the OpenMP kernels; 0 restores the runtime default.
void set_threads(int n);
int max_threads();

}  // namespace svpde
