#pragma once

// Small dense row-major matrices. The double instantiation routes its
// products and row updates through the SIMD kernels; other scalar types
// (quad) use plain loops.

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <type_traits>
#include <utility>
#include <vector>

#include "macscale/error.hpp"
#include "macscale/kernels.hpp"
#include "macscale/real.hpp"

namespace macscale {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw DomainError("ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* row(std::size_t i) { return data_.data() + i * cols_; }
  const T* row(std::size_t i) const { return data_.data() + i * cols_; }
  const std::vector<T>& values() const { return data_; }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(T s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DomainError("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using PhaseMatrix = Matrix<double>;
using QMatrix = Matrix<quad>;

template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  return a += b;
}
template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  return a -= b;
}
template <class T>
Matrix<T> operator*(T s, Matrix<T> a) {
  return a *= s;
}

// c += a * b
template <class T>
void mul_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw DomainError("matrix product shape mismatch");
  if constexpr (std::is_same_v<T, double>) {
    kernels::gemm_acc(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), b.data(),
                      b.cols(), c.data(), c.cols());
  } else {
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
      T* ci = c.row(i);
      for (std::size_t p = 0; p < a.cols(); ++p) {
        const T aip = a(i, p);
        if (aip == T(0)) continue;
        const T* bp = b.row(p);
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
  }
}

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> c(a.rows(), b.cols());
  mul_acc(a, b, c);
  return c;
}

template <class T>
Matrix<T> power(const Matrix<T>& a, int n) {
  Matrix<T> r = Matrix<T>::identity(a.rows());
  Matrix<T> base = a;
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return r;
}

template <class To, class From>
Matrix<To> cast(const Matrix<From>& m) {
  Matrix<To> r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) r.data()[i] = static_cast<To>(m.data()[i]);
  return r;
}

template <class T>
T norm_inf(const Matrix<T>& m) {
  T best = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    T s = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += qabs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

template <class T>
T max_abs(const Matrix<T>& m) {
  T best = 0;
  for (std::size_t i = 0; i < m.size(); ++i) best = std::max(best, qabs(m.data()[i]));
  return best;
}

template <class T>
T max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("matrix shape mismatch");
  if constexpr (std::is_same_v<T, double>) {
    return kernels::max_abs_diff(a.size(), a.data(), b.data());
  } else {
    T best = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      best = std::max(best, qabs(a.data()[i] - b.data()[i]));
    return best;
  }
}

template <class T>
std::vector<T> row_sums(const Matrix<T>& m) {
  std::vector<T> s(m.rows(), T(0));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s[i] += m(i, j);
  return s;
}

template <class T>
bool all_finite(const Matrix<T>& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    const T x = m.data()[i];
    if constexpr (std::is_same_v<T, double>) {
      if (!std::isfinite(x)) return false;
    } else {
      if (!is_finite(x)) return false;
    }
  }
  return true;
}

// LU with partial pivoting. solve() gives A^{-1}B, solve_right() gives B A^{-1}.
template <class T>
class Lu {
 public:
  explicit Lu(Matrix<T> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (!lu_.square()) throw DomainError("LU needs a square matrix");
    const std::size_t n = lu_.rows();
    norm_ = norm_inf(lu_);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      T best = qabs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (qabs(lu_(i, k)) > best) {
          best = qabs(lu_(i, k));
          piv = i;
        }
      }
      if (best == T(0)) {
        singular_ = true;
        continue;
      }
      if (piv != k) {
        std::swap_ranges(lu_.row(k), lu_.row(k) + n, lu_.row(piv));
        std::swap(perm_[k], perm_[piv]);
      }
      const T pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const T f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == T(0)) continue;
        row_update(n - k - 1, -f, lu_.row(k) + k + 1, lu_.row(i) + k + 1);
      }
    }
  }

  bool singular() const { return singular_; }
  std::size_t dim() const { return lu_.rows(); }

  Matrix<T> solve(const Matrix<T>& b) const {
    require_regular();
    const std::size_t n = dim(), m = b.cols();
    if (b.rows() != n) throw DomainError("LU solve shape mismatch");
    Matrix<T> x(n, m);
    for (std::size_t i = 0; i < n; ++i) std::copy(b.row(perm_[i]), b.row(perm_[i]) + m, x.row(i));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k)
        if (lu_(i, k) != T(0)) row_update(m, -lu_(i, k), x.row(k), x.row(i));
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k)
        if (lu_(ii, k) != T(0)) row_update(m, -lu_(ii, k), x.row(k), x.row(ii));
      const T d = lu_(ii, ii);
      for (std::size_t j = 0; j < m; ++j) x(ii, j) /= d;
    }
    return x;
  }

  // X A = B  =>  X = B U^{-1} L^{-1} P
  Matrix<T> solve_right(const Matrix<T>& b) const {
    require_regular();
    const std::size_t n = dim();
    if (b.cols() != n) throw DomainError("LU right solve shape mismatch");
    Matrix<T> x = b;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      T* xr = x.row(r);
      for (std::size_t j = 0; j < n; ++j) {
        T s = xr[j];
        for (std::size_t k = 0; k < j; ++k) s -= xr[k] * lu_(k, j);
        xr[j] = s / lu_(j, j);
      }
      for (std::size_t jj = n; jj-- > 0;) {
        T s = xr[jj];
        for (std::size_t k = jj + 1; k < n; ++k) s -= xr[k] * lu_(k, jj);
        xr[jj] = s;
      }
    }
    Matrix<T> out(x.rows(), n);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < n; ++j) out(r, perm_[j]) = x(r, j);
    return out;
  }

  Matrix<T> inverse() const { return solve(Matrix<T>::identity(dim())); }

  // Infinity-norm condition number from the explicit inverse; cheap at phase sizes.
  T condition() const {
    if (singular_) return T(-1);
    return norm_ * norm_inf(inverse());
  }

 private:
  static void row_update(std::size_t n, T alpha, const T* x, T* y) {
    if constexpr (std::is_same_v<T, double>) {
      kernels::axpy(n, alpha, x, y);
    } else {
      for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
    }
  }

  void require_regular() const {
    if (singular_) throw NumericalError("singular matrix in LU solve");
  }

  Matrix<T> lu_;
  std::vector<std::size_t> perm_;
  T norm_ = 0;
  bool singular_ = false;
};

template <class T>
Matrix<T> inverse(const Matrix<T>& a) {
  return Lu<T>(a).inverse();
}

// a * b^{-1}
template <class T>
Matrix<T> right_divide(const Matrix<T>& a, const Matrix<T>& b) {
  return Lu<T>(b).solve_right(a);
}

// a^{-1} * b
template <class T>
Matrix<T> left_divide(const Matrix<T>& a, const Matrix<T>& b) {
  return Lu<T>(a).solve(b);
}

}  // namespace macscale
