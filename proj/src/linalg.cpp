#include "gcs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Mat::Mat(int rows, int cols) : rows_(rows), cols_(cols) {
    require(rows >= 1 && cols >= 1, "Mat: rows and cols must be >= 1");
    a_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

Mat::Mat(int rows, int cols, std::vector<double> entries) : rows_(rows), cols_(cols), a_(std::move(entries)) {
    require(rows >= 1 && cols >= 1, "Mat: rows and cols must be >= 1");
    require(a_.size() == static_cast<size_t>(rows) * cols, "Mat: entry count does not match rows*cols");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    require(rows_ >= 1, "Mat: rows must be >= 1");
    cols_ = static_cast<int>(rows.begin()->size());
    require(cols_ >= 1, "Mat: cols must be >= 1");
    a_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
        require(static_cast<int>(r.size()) == cols_, "Mat: ragged initializer");
        a_.insert(a_.end(), r.begin(), r.end());
    }
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat Mat::block(int i0, int j0, int nrows, int ncols) const {
    require(i0 >= 0 && j0 >= 0 && i0 + nrows <= rows_ && j0 + ncols <= cols_, "Mat::block: out of range");
    Mat b(nrows, ncols);
    for (int i = 0; i < nrows; ++i)
        for (int j = 0; j < ncols; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
}

void Mat::set_block(int i0, int j0, const Mat& b) {
    require(i0 >= 0 && j0 >= 0 && i0 + b.rows() <= rows_ && j0 + b.cols() <= cols_, "Mat::set_block: out of range");
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
}

double Mat::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

double Mat::frobenius_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

bool Mat::all_finite() const {
    for (double v : a_)
        if (!std::isfinite(v)) return false;
    return true;
}

Mat operator+(const Mat& x, const Mat& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols(), "Mat +: shape mismatch");
    Mat r = x;
    for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] += y.data()[k];
    return r;
}

Mat operator-(const Mat& x, const Mat& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols(), "Mat -: shape mismatch");
    Mat r = x;
    for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] -= y.data()[k];
    return r;
}

Mat operator*(const Mat& x, const Mat& y) {
    require(x.cols() == y.rows(), "Mat *: inner dimension mismatch");
    Mat r(x.rows(), y.cols());
    for (int i = 0; i < x.rows(); ++i) {
        for (int k = 0; k < x.cols(); ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < y.cols(); ++j) r(i, j) += xik * y(k, j);
        }
    }
    return r;
}

Mat operator*(double s, const Mat& x) {
    Mat r = x;
    for (double& v : r.data()) v *= s;
    return r;
}

Mat operator-(const Mat& x) { return -1.0 * x; }

std::vector<double> operator*(const Mat& x, const std::vector<double>& v) {
    require(x.cols() == static_cast<int>(v.size()), "Mat * vec: dimension mismatch");
    std::vector<double> r(x.rows(), 0.0);
    for (int i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols(); ++j) s += x(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

SymMat::SymMat(int dim) : n_(dim) {
    require(dim >= 1, "SymMat: dim must be >= 1");
    a_.assign(static_cast<size_t>(dim) * (dim + 1) / 2, 0.0);
}

size_t SymMat::packed_index(int i, int j) const {
    if (i < j) std::swap(i, j);
    // column j holds entries (j..n-1, j)
    return static_cast<size_t>(j) * n_ - static_cast<size_t>(j) * (j - 1) / 2 + (i - j);
}

SymMat SymMat::identity(int n) {
    SymMat s(n);
    for (int i = 0; i < n; ++i) s.at(i, i) = 1.0;
    return s;
}

SymMat SymMat::from_mat(const Mat& m, double tol) {
    require(m.rows() == m.cols(), "SymMat::from_mat: matrix not square");
    double asym = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i + 1; j < m.cols(); ++j) asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    if (asym > tol * (1.0 + m.max_abs()))
        throw std::invalid_argument("SymMat::from_mat: asymmetry " + std::to_string(asym) + " above tolerance");
    SymMat s(m.rows());
    for (int j = 0; j < m.cols(); ++j)
        for (int i = j; i < m.rows(); ++i) s.at(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

Mat SymMat::to_mat() const {
    Mat m(n_, n_);
    for (int j = 0; j < n_; ++j)
        for (int i = j; i < n_; ++i) m(i, j) = m(j, i) = at(i, j);
    return m;
}

double SymMat::trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += at(i, i);
    return t;
}

double SymMat::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

SymMat operator+(const SymMat& x, const SymMat& y) {
    require(x.dim() == y.dim(), "SymMat +: dim mismatch");
    SymMat r = x;
    for (size_t k = 0; k < r.packed().size(); ++k) r.packed()[k] += y.packed()[k];
    return r;
}

SymMat operator-(const SymMat& x, const SymMat& y) {
    require(x.dim() == y.dim(), "SymMat -: dim mismatch");
    SymMat r = x;
    for (size_t k = 0; k < r.packed().size(); ++k) r.packed()[k] -= y.packed()[k];
    return r;
}

SymMat operator*(double s, const SymMat& x) {
    SymMat r = x;
    for (double& v : r.packed()) v *= s;
    return r;
}

Mat kron(const Mat& x, const Mat& y) {
    Mat r(x.rows() * y.rows(), x.cols() * y.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) {
            const double xij = x(i, j);
            if (xij == 0.0) continue;
            for (int p = 0; p < y.rows(); ++p)
                for (int q = 0; q < y.cols(); ++q) r(i * y.rows() + p, j * y.cols() + q) = xij * y(p, q);
        }
    return r;
}

Mat blkdiag(const std::vector<Mat>& blocks) {
    require(!blocks.empty(), "blkdiag: at least one block required");
    int rows = 0, cols = 0;
    for (const Mat& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat r(rows, cols);
    int i0 = 0, j0 = 0;
    for (const Mat& b : blocks) {
        r.set_block(i0, j0, b);
        i0 += b.rows();
        j0 += b.cols();
    }
    return r;
}

double spectral_norm(const Mat& x) {
    // Gram matrix of the smaller side keeps the eigenproblem cheap.
    const bool tall = x.rows() >= x.cols();
    const Mat g = tall ? x.transpose() * x : x * x.transpose();
    SymMat gs = SymMat::from_mat(g, 1e-12);
    EigSym e = eig_sym(gs);
    double lmax = e.values.empty() ? 0.0 : e.values.back();
    return std::sqrt(std::max(0.0, lmax));
}

double spectral_radius_est(const Mat& x, int squarings) {
    require(x.rows() == x.cols(), "spectral_radius_est: matrix not square");
    Mat p = x;
    double log_scale = 0.0;
    double power = 1.0;
    double est = spectral_norm(p);
    for (int k = 0; k < squarings; ++k) {
        double s = p.max_abs();
        if (s == 0.0) return 0.0;
        p = (1.0 / s) * p;
        log_scale = (log_scale + std::log(s));
        p = p * p;
        log_scale *= 2.0;
        power *= 2.0;
        double nrm = spectral_norm(p);
        if (nrm == 0.0) return 0.0;
        est = std::exp((std::log(nrm) + log_scale) / power);
        if (!std::isfinite(est)) break;
    }
    return est;
}

EigSym eig_sym(const SymMat& x, int max_sweeps) {
    const int n = x.dim();
    Mat a = x.to_mat();
    Mat v = Mat::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const double scale = std::max(1.0, x.max_abs());
    const double tol = 1e-15 * scale * n;

    int sweep = 0;
    while (off_norm() > tol) {
        if (++sweep > max_sweeps)
            throw EigIterationError("eig_sym: no convergence in " + std::to_string(max_sweeps) + " sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e154) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

    EigSym e;
    e.values.resize(n);
    e.vectors = Mat(n, n);
    for (int k = 0; k < n; ++k) {
        e.values[k] = a(order[k], order[k]);
        for (int i = 0; i < n; ++i) e.vectors(i, k) = v(i, order[k]);
    }
    return e;
}

Mat psd_factor(const SymMat& x, double tol) {
    EigSym e = eig_sym(x);
    const double lmin = e.values.front();
    if (lmin < -tol)
        throw NotPsdError("psd_factor: matrix not positive semidefinite, lambda_min = " + std::to_string(lmin), lmin);
    const int n = x.dim();
    // F = sqrt(clip(Lambda)) V^T so that F^T F = V Lambda V^T = x.
    Mat f(n, n);
    for (int k = 0; k < n; ++k) {
        const double lk = std::sqrt(std::max(0.0, e.values[k]));
        for (int j = 0; j < n; ++j) f(k, j) = lk * e.vectors(j, k);
    }
    return f;
}

double default_psd_tol(const SymMat& x) { return 1e-9 + 1e-12 * x.to_mat().frobenius_norm(); }

bool cholesky(const SymMat& x, Mat& l_out) {
    const int n = x.dim();
    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = x.at(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0 || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = x.at(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    l_out = std::move(l);
    return true;
}

SymMat sym_inverse_spd(const SymMat& x) {
    EigSym e = eig_sym(x);
    if (e.values.front() <= 0.0)
        throw SingularMatrixError("sym_inverse_spd: matrix not positive definite");
    const int n = x.dim();
    SymMat r(n);
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += e.vectors(i, k) * e.vectors(j, k) / e.values[k];
            r.at(i, j) = s;
        }
    return r;
}

Svd svd(const Mat& x, int max_sweeps) {
    const bool transposed = x.rows() < x.cols();
    Mat w = transposed ? x.transpose() : x;  // m x n with m >= n
    const int m = w.rows();
    const int n = w.cols();
    Mat v = Mat::identity(n);

    // One-sided Jacobi: orthogonalize column pairs until all inner products
    // are negligible relative to the column norms.
    const double eps = 1e-15;
    for (int sweep = 0;; ++sweep) {
        if (sweep >= max_sweeps) throw EigIterationError("svd: no convergence in " + std::to_string(max_sweeps) + " sweeps");
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += w(i, p) * w(i, p);
                    aqq += w(i, q) * w(i, q);
                    apq += w(i, p) * w(i, q);
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(tau) > 1e154) {
                    t = 1.0 / (2.0 * tau);
                } else {
                    t = 1.0 / (std::abs(tau) + std::sqrt(tau * tau + 1.0));
                    if (tau < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(s);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.sigma.resize(n);
    Mat u(m, n), vs(n, n);
    for (int k = 0; k < n; ++k) {
        const int j = order[k];
        out.sigma[k] = sigma[j];
        const double inv = sigma[j] > 0.0 ? 1.0 / sigma[j] : 0.0;
        for (int i = 0; i < m; ++i) u(i, k) = w(i, j) * inv;
        for (int i = 0; i < n; ++i) vs(i, k) = v(i, j);
    }
    if (transposed) {
        out.u = vs;
        out.v = u;
    } else {
        out.u = u;
        out.v = vs;
    }
    return out;
}

Mat pinv(const Mat& x, double tol) {
    const Svd s = svd(x);
    const double cut = s.sigma.empty() ? 0.0 : s.sigma.front() * tol;
    Mat r(x.cols(), x.rows());
    for (size_t k = 0; k < s.sigma.size(); ++k) {
        if (s.sigma[k] <= cut || s.sigma[k] == 0.0) continue;
        const double inv = 1.0 / s.sigma[k];
        for (int i = 0; i < x.cols(); ++i) {
            const double vik = s.v(i, static_cast<int>(k)) * inv;
            if (vik == 0.0) continue;
            for (int j = 0; j < x.rows(); ++j) r(i, j) += vik * s.u(j, static_cast<int>(k));
        }
    }
    return r;
}

double cond2(const Mat& x) {
    const Svd s = svd(x);
    const double smax = s.sigma.front();
    const double smin = s.sigma.back();
    if (smin <= 0.0 || smax <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

Mat lu_solve(const Mat& a, const Mat& b) {
    require(a.rows() == a.cols(), "lu_solve: matrix not square");
    require(a.rows() == b.rows(), "lu_solve: rhs row mismatch");
    const int n = a.rows();
    Mat lu = a;
    Mat x = b;
    std::vector<int> piv(n);
    std::iota(piv.begin(), piv.end(), 0);
    for (int k = 0; k < n; ++k) {
        int pk = k;
        double best = std::abs(lu(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > best) {
                best = std::abs(lu(i, k));
                pk = i;
            }
        if (best < 1e-300) throw SingularMatrixError("lu_solve: singular matrix");
        if (pk != k) {
            for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(pk, j));
            for (int j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(pk, j));
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = lu(i, k) / lu(k, k);
            lu(i, k) = m;
            if (m == 0.0) continue;
            for (int j = k + 1; j < n; ++j) lu(i, j) -= m * lu(k, j);
            for (int j = 0; j < x.cols(); ++j) x(i, j) -= m * x(k, j);
        }
    }
    for (int j = 0; j < x.cols(); ++j) {
        for (int i = n - 1; i >= 0; --i) {
            double s = x(i, j);
            for (int k = i + 1; k < n; ++k) s -= lu(i, k) * x(k, j);
            x(i, j) = s / lu(i, i);
        }
    }
    return x;
}

std::vector<double> svec(const SymMat& x) {
    const int n = x.dim();
    std::vector<double> v;
    v.reserve(static_cast<size_t>(n) * (n + 1) / 2);
    const double r2 = std::sqrt(2.0);
    for (int j = 0; j < n; ++j) {
        v.push_back(x.at(j, j));
        for (int i = j + 1; i < n; ++i) v.push_back(r2 * x.at(i, j));
    }
    return v;
}

SymMat smat(const std::vector<double>& v) {
    // n from n(n+1)/2 = len
    const size_t len = v.size();
    int n = static_cast<int>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
    if (static_cast<size_t>(n) * (n + 1) / 2 != len)
        throw std::invalid_argument("smat: length " + std::to_string(len) + " is not a triangular number");
    SymMat x(n);
    // Dividing by the same constant svec multiplied by keeps the roundtrip
    // within one ulp (exactness is not attainable for an irrational scale).
    const double r2 = std::sqrt(2.0);
    size_t k = 0;
    for (int j = 0; j < n; ++j) {
        x.at(j, j) = v[k++];
        for (int i = j + 1; i < n; ++i) x.at(i, j) = v[k++] / r2;
    }
    return x;
}

QrPivoted qr_pivoted(const Mat& a, double rank_tol) {
    const int n = a.rows();
    const int m = a.cols();
    Mat r = a;
    Mat q = Mat::identity(n);
    QrPivoted out;
    out.perm.resize(m);
    std::iota(out.perm.begin(), out.perm.end(), 0);

    std::vector<double> colnorm(m, 0.0);
    auto col_norm2 = [&](int j, int from) {
        double s = 0.0;
        for (int i = from; i < n; ++i) s += r(i, j) * r(i, j);
        return s;
    };

    const int steps = std::min(n, m);
    double first_pivot = 0.0;
    int rank = 0;
    for (int k = 0; k < steps; ++k) {
        for (int j = k; j < m; ++j) colnorm[j] = col_norm2(j, k);
        int jmax = k;
        for (int j = k + 1; j < m; ++j)
            if (colnorm[j] > colnorm[jmax]) jmax = j;
        if (jmax != k) {
            for (int i = 0; i < n; ++i) std::swap(r(i, k), r(i, jmax));
            std::swap(out.perm[k], out.perm[jmax]);
        }
        const double piv = std::sqrt(std::max(0.0, colnorm[jmax]));
        if (k == 0) first_pivot = piv;
        if (piv <= rank_tol * std::max(first_pivot, 1e-300)) break;
        ++rank;

        // Householder vector for column k below the diagonal.
        std::vector<double> vh(n - k, 0.0);
        double alpha = 0.0;
        for (int i = k; i < n; ++i) {
            vh[i - k] = r(i, k);
            alpha += r(i, k) * r(i, k);
        }
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (vh[0] > 0.0) alpha = -alpha;
        vh[0] -= alpha;
        double vnorm2 = 0.0;
        for (double t : vh) vnorm2 += t * t;
        if (vnorm2 <= 0.0) continue;

        // Apply H = I - 2 v v^T / (v^T v) to R (left) and accumulate into Q.
        for (int j = k; j < m; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += vh[i - k] * r(i, j);
            s = 2.0 * s / vnorm2;
            for (int i = k; i < n; ++i) r(i, j) -= s * vh[i - k];
        }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += vh[i - k] * q(i, j);
            s = 2.0 * s / vnorm2;
            for (int i = k; i < n; ++i) q(i, j) -= s * vh[i - k];
        }
    }

    out.q = q.transpose();  // accumulated reflections applied to identity
    out.r = r;
    out.rank = rank;
    return out;
}

}  // namespace gcs
