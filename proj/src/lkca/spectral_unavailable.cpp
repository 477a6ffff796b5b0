// Copyright 2026 The LKCA Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "lkca/layer.hpp"

namespace lkca {

bool spectral_view_available() { return false; }

template <Real T>
Tensor<T> forward_spectral_view(const Tensor<T>&, const LKCALayer<T>&, MacCounter*) {
  throw std::logic_error("spectral view not built (configure with LKCA_WITH_FFTW=ON)");
}

template Tensor<float> forward_spectral_view(const Tensor<float>&, const LKCALayer<float>&,
                                             MacCounter*);
template Tensor<double> forward_spectral_view(const Tensor<double>&, const LKCALayer<double>&,
                                              MacCounter*);

}  // namespace lkca
