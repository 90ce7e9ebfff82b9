#pragma once

// Dense real matrix kernel used by the synthesis toolkit.
//
// Everything here is plain double precision, row-major, value-semantic and
// deterministic: identical inputs give bitwise identical outputs on a given
// build.  Sizes are small (tens to a few hundred rows), so the algorithms
// favour robustness over asymptotics: cyclic Jacobi for symmetric
// eigenproblems, Householder QR with column pivoting for rank decisions,
// Gram-matrix based SVD quantities.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcs {

// Thrown when the symmetric eigensolver exceeds its sweep budget.
struct EigIterationError : std::runtime_error {
    explicit EigIterationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by psd_factor when the smallest eigenvalue is below -tol.
struct NotPsdError : std::runtime_error {
    NotPsdError(const std::string& what, double lmin)
        : std::runtime_error(what), lambda_min(lmin) {}
    double lambda_min;
};

// Thrown when a linear solve or inverse meets a numerically singular matrix.
struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what, double cond = 0.0)
        : std::runtime_error(what), condition(cond) {}
    double condition;
};

/// Dense real matrix, row-major storage.  Rows and cols are always >= 1;
/// empty matrices are rejected at construction.
class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols);
    Mat(int rows, int cols, std::vector<double> entries);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat zeros(int rows, int cols) { return Mat(rows, cols); }
    static Mat identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Mat transpose() const;
    Mat block(int i0, int j0, int nrows, int ncols) const;
    void set_block(int i0, int j0, const Mat& b);

    double max_abs() const;
    double frobenius_norm() const;
    bool all_zero() const { return max_abs() == 0.0; }
    bool all_finite() const;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

Mat operator+(const Mat& x, const Mat& y);
Mat operator-(const Mat& x, const Mat& y);
Mat operator*(const Mat& x, const Mat& y);
Mat operator*(double s, const Mat& x);
Mat operator-(const Mat& x);

std::vector<double> operator*(const Mat& x, const std::vector<double>& v);
double dot(const std::vector<double>& x, const std::vector<double>& y);
double norm2(const std::vector<double>& x);

/// Symmetric matrix with a single stored triangle (lower, column-major),
/// so entries (i,j) and (j,i) are the same memory and equality is exact.
class SymMat {
  public:
    SymMat() = default;
    explicit SymMat(int dim);

    static SymMat identity(int n);
    static SymMat zeros(int n) { return SymMat(n); }

    // Symmetrises (a+aT)/2; rejects inputs with asymmetry above tol.
    static SymMat from_mat(const Mat& m, double tol = 1e-9);

    int dim() const { return n_; }

    double& at(int i, int j) { return a_[packed_index(i, j)]; }
    double at(int i, int j) const { return a_[packed_index(i, j)]; }

    const std::vector<double>& packed() const { return a_; }
    std::vector<double>& packed() { return a_; }

    Mat to_mat() const;
    double trace() const;
    double max_abs() const;

  private:
    size_t packed_index(int i, int j) const;
    int n_ = 0;
    std::vector<double> a_;  // lower triangle, column-major
};

SymMat operator+(const SymMat& x, const SymMat& y);
SymMat operator-(const SymMat& x, const SymMat& y);
SymMat operator*(double s, const SymMat& x);

/// Kronecker product; block (i,j) of the result is x(i,j) * y.
Mat kron(const Mat& x, const Mat& y);

/// Block-diagonal assembly of the given matrices (at least one required).
Mat blkdiag(const std::vector<Mat>& blocks);

/// Largest singular value (2-norm).  Computed from the symmetric
/// eigendecomposition of the smaller Gram matrix.
double spectral_norm(const Mat& x);

/// Upper estimate of the spectral radius via repeated squaring:
/// ||A^(2^k)||_2^(1/2^k) for k up to `squarings`.  Converges to rho(A) from
/// above; adequate for stability warnings and test oracles.
double spectral_radius_est(const Mat& x, int squarings = 12);

struct EigSym {
    std::vector<double> values;  // ascending
    Mat vectors;                 // orthonormal columns, same order
};

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
/// Throws EigIterationError if off-diagonal mass has not vanished within
/// `max_sweeps` sweeps.
EigSym eig_sym(const SymMat& x, int max_sweeps = 100);

/// Square factor F with F^T F == x (within tol).  Eigenvalues in [-tol, 0)
/// are clipped to zero; smaller ones raise NotPsdError.
Mat psd_factor(const SymMat& x, double tol);

/// Default factorisation tolerance: 1e-9 absolute plus 1e-12 relative.
double default_psd_tol(const SymMat& x);

/// Cholesky factor L (lower) with L L^T == x; empty optional if x is not
/// positive definite.
bool cholesky(const SymMat& x, Mat& l_out);

/// Symmetric positive definite inverse via eigendecomposition; result is
/// symmetric by construction.
SymMat sym_inverse_spd(const SymMat& x);

struct Svd {
    Mat u;                      // min(r,c) orthonormal columns
    std::vector<double> sigma;  // descending, length min(r,c)
    Mat v;                      // min(r,c) orthonormal columns
};

/// Thin singular value decomposition x == u diag(sigma) v^T by one-sided
/// Jacobi; small singular values are resolved to machine precision.
Svd svd(const Mat& x, int max_sweeps = 60);

/// Moore-Penrose pseudo-inverse; singular values below tol * sigma_max are
/// treated as zero.  Default cutoff 1e-12 * sigma_max.
Mat pinv(const Mat& x, double tol = 1e-12);

/// 2-norm condition number sigma_max / sigma_min (infinity when singular).
double cond2(const Mat& x);

/// Solve a x = b with partial-pivot LU (a square).  Throws
/// SingularMatrixError when a pivot falls below a tiny threshold.
Mat lu_solve(const Mat& a, const Mat& b);

/// Symmetric vectorisation: column-major lower triangle with off-diagonal
/// entries scaled by sqrt(2), so dot(svec(a), svec(b)) == trace(a b).
std::vector<double> svec(const SymMat& x);

/// Inverse of svec; throws std::invalid_argument on length mismatch.
SymMat smat(const std::vector<double>& v);

struct QrPivoted {
    Mat q;               // full orthogonal, n x n
    Mat r;               // n x m upper trapezoidal
    std::vector<int> perm;  // column permutation: A(:, perm[k]) ~ column k
    int rank = 0;
};

/// Householder QR with column pivoting of an n x m matrix.  Rank is decided
/// by |R(k,k)| <= rank_tol * |R(0,0)|.
QrPivoted qr_pivoted(const Mat& a, double rank_tol = 1e-12);

}  // namespace gcs
