#ifndef AGSR_MATRIX_HPP
#define AGSR_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace agsr {

/// Dense row-major matrix of doubles. The workhorse value type of the
/// library; all graph adjacencies, features and parameters are stored
/// in this form.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix identity(std::size_t n);

/// C = A * B. Throws ShapeError on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
/// Entrywise product.
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);
/// Exact element and shape equality.
bool bitwise_equal(const Matrix& a, const Matrix& b);

} // namespace agsr

#endif // AGSR_MATRIX_HPP
