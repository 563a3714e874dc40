#pragma once

#include <vector>

#include "freqadv/tensor.hpp"

namespace freqadv {

// Orthonormal (unitary) 2D type-II DCT and inverse. Separable: rows then
// columns through a cached d x d cosine basis. Round trips reproduce the
// input to ~1e-12 at d=299, and Parseval holds since the basis is
// orthonormal on both sides.
//
// Coefficient indexing is 0-based; textbook 1-based (i,j) maps to (i-1,j-1).

SpectralPlane dct2(const Plane& plane);
Plane idct2(const SpectralPlane& spectrum);

// Per color channel, independently.
std::vector<SpectralPlane> dct_image(const Image& image);
Image idct_image(const std::vector<SpectralPlane>& spectra);

// Row k of the basis: basis(k, p) = a(k) * cos(pi*(2p+1)*k / (2d)) with
// a(0)=sqrt(1/d), a(k>0)=sqrt(2/d). Shared, computed once per side.
const std::vector<double>& dct_basis(int side);

}  // namespace freqadv
