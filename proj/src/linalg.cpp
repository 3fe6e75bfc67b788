#include "t4s/linalg.hpp"

#include <algorithm>

namespace t4s {

ThinQR thin_qr(const Matrix& a) {
    const Index m = a.rows(), n = a.cols(), k = std::min(m, n);
    Eigen::HouseholderQR<Matrix> qr(a);
    ThinQR out;
    out.q = qr.householderQ() * Matrix::Identity(m, k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

ThinSVD thin_svd(const Matrix& a) {
    ThinSVD out;
    if (a.size() == 0) {
        out.u = Matrix::Zero(a.rows(), 0);
        out.s = Vector::Zero(0);
        out.v = Matrix::Zero(a.cols(), 0);
        return out;
    }
    // Jacobi is slower but keeps tiny singular values accurate, which the
    // rank floor and the implicit/dense spectrum comparisons rely on.
    if (std::min(a.rows(), a.cols()) <= 64) {
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    } else {
        Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    }
    return out;
}

Matrix orthonormal_columns(const Matrix& a) { return thin_qr(a).q; }

}  // namespace t4s
