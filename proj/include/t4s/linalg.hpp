#pragma once

#include "t4s/types.hpp"

namespace t4s {

struct ThinQR {
    Matrix q;  // m x k, k = min(m, n)
    Matrix r;  // k x n
};

ThinQR thin_qr(const Matrix& a);

struct ThinSVD {
    Matrix u;
    Vector s;
    Matrix v;
};

ThinSVD thin_svd(const Matrix& a);

/// Orthonormal basis for the column span of a (thin QR, all columns kept).
Matrix orthonormal_columns(const Matrix& a);

}  // namespace t4s
