#include "t4s/dense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

namespace t4s {

namespace {

std::atomic<Index> g_limit{100000000};

struct Split {
    Index pre, n, post;
};

Split split_at(const std::vector<Index>& shape, Index mode) {
    Split s{1, shape[static_cast<std::size_t>(mode)], 1};
    for (Index i = 0; i < mode; ++i) s.pre *= shape[static_cast<std::size_t>(i)];
    for (Index i = mode + 1; i < static_cast<Index>(shape.size()); ++i)
        s.post *= shape[static_cast<std::size_t>(i)];
    return s;
}

}  // namespace

Index dense_element_limit() { return g_limit.load(); }
void set_dense_element_limit(Index limit) { g_limit.store(limit); }

Index checked_product(const std::vector<Index>& extents) {
    Index n = 1;
    for (Index e : extents) {
        require(e >= 1, "extents must be positive");
        if (n > dense_element_limit() / e) throw std::length_error("dense element guard exceeded");
        n *= e;
    }
    if (n > dense_element_limit()) throw std::length_error("dense element guard exceeded");
    return n;
}

DenseTensor::DenseTensor(std::vector<Index> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_product(shape_)), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    require(static_cast<Index>(data_.size()) == checked_product(shape_), "data length != product of extents");
}

Index DenseTensor::flat_index(const std::vector<Index>& idx) const {
    require(idx.size() == shape_.size(), "index arity mismatch");
    Index f = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] >= 0 && idx[i] < shape_[i], "index out of range");
        f = f * shape_[i] + idx[i];
    }
    return f;
}

double& DenseTensor::operator()(const std::vector<Index>& idx) {
    return data_[static_cast<std::size_t>(flat_index(idx))];
}
double DenseTensor::operator()(const std::vector<Index>& idx) const {
    return data_[static_cast<std::size_t>(flat_index(idx))];
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& o) {
    require(shape_ == o.shape_, "shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}
DenseTensor& DenseTensor::operator-=(const DenseTensor& o) {
    require(shape_ == o.shape_, "shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}
DenseTensor& DenseTensor::operator*=(double a) {
    for (double& x : data_) x *= a;
    return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

DenseTensor DenseTensor::random(const std::vector<Index>& shape, Rng& rng) {
    DenseTensor t(shape);
    for (double& x : t.data_) x = rng.normal();
    return t;
}

Matrix unfold(const DenseTensor& t, Index i) {
    require(i >= 0 && i <= t.order(), "unfolding index out of range");
    Index rows = 1;
    for (Index k = 0; k < i; ++k) rows *= t.extent(k);
    Index cols = t.size() / rows;
    return Eigen::Map<const RowMatrix>(t.data().data(), rows, cols);
}

DenseTensor fold(const Matrix& m, const std::vector<Index>& shape) {
    DenseTensor t(shape);
    require(m.size() == t.size(), "fold size mismatch");
    Eigen::Map<RowMatrix>(t.data().data(), m.rows(), m.cols()) = m;
    return t;
}

Matrix matricize(const DenseTensor& t, Index i) {
    require(i >= 1 && i <= t.order(), "matricization index out of range");
    Split s = split_at(t.shape(), i - 1);
    Matrix m(s.n, s.pre * s.post);
    const double* d = t.data().data();
    for (Index p = 0; p < s.pre; ++p)
        for (Index b = 0; b < s.n; ++b)
            for (Index q = 0; q < s.post; ++q) m(b, p * s.post + q) = d[(p * s.n + b) * s.post + q];
    return m;
}

Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix k(x.rows() * y.rows(), x.cols() * y.cols());
    for (Index a = 0; a < x.rows(); ++a)
        for (Index b = 0; b < x.cols(); ++b)
            k.block(a * y.rows(), b * y.cols(), y.rows(), y.cols()) = x(a, b) * y;
    return k;
}

Vector kron(const Vector& x, const Vector& y) {
    Vector k(x.size() * y.size());
    for (Index a = 0; a < x.size(); ++a) k.segment(a * y.size(), y.size()) = x[a] * y;
    return k;
}

DenseTensor mode_product(const DenseTensor& t, Index mode, const Matrix& m) {
    require(mode >= 0 && mode < t.order(), "mode out of range");
    Split s = split_at(t.shape(), mode);
    require(m.cols() == s.n, "mode_product dimension mismatch");
    std::vector<Index> shape = t.shape();
    shape[static_cast<std::size_t>(mode)] = m.rows();
    DenseTensor out(shape);
    for (Index p = 0; p < s.pre; ++p) {
        Eigen::Map<const RowMatrix> in(t.data().data() + p * s.n * s.post, s.n, s.post);
        Eigen::Map<RowMatrix> o(out.data().data() + p * m.rows() * s.post, m.rows(), s.post);
        o.noalias() = m * in;
    }
    return out;
}

DenseTensor contract_mode(const DenseTensor& t, Index mode, const Vector& w) {
    require(mode >= 0 && mode < t.order(), "mode out of range");
    require(w.size() == t.extent(mode), "probe dimension mismatch");
    Split s = split_at(t.shape(), mode);
    std::vector<Index> shape = t.shape();
    shape.erase(shape.begin() + mode);
    if (shape.empty()) shape.push_back(1);
    DenseTensor out(shape);
    for (Index p = 0; p < s.pre; ++p) {
        Eigen::Map<const RowMatrix> in(t.data().data() + p * s.n * s.post, s.n, s.post);
        Eigen::Map<Vector>(out.data().data() + p * s.post, s.post).noalias() = in.transpose() * w;
    }
    return out;
}

DenseTensor permute(const DenseTensor& t, const std::vector<Index>& perm) {
    const auto d = static_cast<std::size_t>(t.order());
    require(perm.size() == d, "permutation arity mismatch");
    std::vector<Index> shape(d), in_stride(d), idx(d, 0);
    Index st = 1;
    for (std::size_t i = d; i-- > 0;) {
        in_stride[i] = st;
        st *= t.shape()[i];
    }
    for (std::size_t i = 0; i < d; ++i) shape[i] = t.shape()[static_cast<std::size_t>(perm[i])];
    DenseTensor out(shape);
    for (Index f = 0; f < out.size(); ++f) {
        Index src = 0;
        for (std::size_t i = 0; i < d; ++i) src += idx[i] * in_stride[static_cast<std::size_t>(perm[i])];
        out.data()[static_cast<std::size_t>(f)] = t.data()[static_cast<std::size_t>(src)];
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < shape[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

std::vector<Vector> probe_dense(const DenseTensor& t, const std::vector<Vector>& w) {
    const Index d = t.order();
    require(static_cast<Index>(w.size()) == d, "one probing vector per index required");
    for (Index i = 0; i < d; ++i)
        require(w[static_cast<std::size_t>(i)].size() == t.extent(i), "probe dimension mismatch");
    std::vector<Vector> z;
    for (Index i = 0; i < d; ++i) {
        DenseTensor cur = t;
        // contract trailing modes first so earlier mode numbers stay valid
        for (Index m = d - 1; m > i; --m) cur = contract_mode(cur, m, w[static_cast<std::size_t>(m)]);
        for (Index m = 0; m < i; ++m) cur = contract_mode(cur, 0, w[static_cast<std::size_t>(m)]);
        z.emplace_back(Eigen::Map<const Vector>(cur.data().data(), t.extent(i)));
    }
    return z;
}

double hs_inner(const DenseTensor& a, const DenseTensor& b) {
    require(a.shape() == b.shape(), "shape mismatch");
    return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

double hs_norm(const DenseTensor& a) { return std::sqrt(hs_inner(a, a)); }

DenseTensor symmetrize_inputs(const DenseTensor& t, Index k) {
    require(k >= 0 && k <= t.order(), "symmetrization count out of range");
    for (Index i = 1; i < k; ++i) require(t.extent(i) == t.extent(0), "unequal input extents");
    std::vector<Index> perm(static_cast<std::size_t>(t.order()));
    std::iota(perm.begin(), perm.end(), 0);
    DenseTensor acc(t.shape());
    double count = 0;
    do {
        acc += permute(t, perm);
        count += 1;
    } while (std::next_permutation(perm.begin(), perm.begin() + k));
    acc *= 1.0 / count;
    return acc;
}

DenseTensor precondition(const DenseTensor& b, const Matrix& c, Index k) {
    require(c.rows() == c.cols(), "preconditioner must be square");
    require(k >= 0 && k <= b.order(), "count out of range");
    DenseTensor out = b;
    const Matrix ct = c.transpose();
    for (Index m = 0; m < k; ++m) {
        require(b.extent(m) == c.rows(), "preconditioner dimension mismatch");
        out = mode_product(out, m, ct);
    }
    return out;
}

}  // namespace t4s
