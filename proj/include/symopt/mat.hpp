#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "symopt/errors.hpp"

namespace symopt {

/// Dense real matrix in row-major order, double precision.
///
/// The workhorse carrier for parameters, gradients, momentum buffers and
/// update directions. Construction from external data validates that every
/// entry is finite.
class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols);
    Mat(int rows, int cols, std::vector<double> data);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

    Mat& operator+=(const Mat& rhs);
    Mat& operator-=(const Mat& rhs);
    Mat& operator*=(double s);

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat lhs, const Mat& rhs);
Mat operator-(Mat lhs, const Mat& rhs);
Mat operator*(double s, Mat rhs);
Mat operator*(const Mat& lhs, const Mat& rhs); // matrix product

Mat transpose(const Mat& a);

/// Frobenius inner product <a, b>.
double dot(const Mat& a, const Mat& b);
double fro_norm(const Mat& a);
double max_abs(const Mat& a);
bool is_finite(const Mat& a);
bool is_zero(const Mat& a);

/// Row i of `a` as a vector, and its Euclidean norm.
double row_norm(const Mat& a, int i);

/// max |a - b| over entries; matrices must share a shape.
double max_abs_diff(const Mat& a, const Mat& b);

/// Subtracts the per-column mean across rows: result has zero column sums.
/// Equivalent to applying I - (1/m) * ones * ones^T on the left.
Mat center_rows(const Mat& a);

/// Column sums as a 1 x cols matrix.
Mat column_sums(const Mat& a);

// --- text fixture format ------------------------------------------------
// First line "rows cols", then `rows` lines of space-separated entries.
// Values are written in shortest round-trip decimal form.

Mat read_mat(std::istream& in);
Mat read_mat_file(const std::string& path);
void write_mat(std::ostream& out, const Mat& a);
void write_mat_file(const std::string& path, const Mat& a);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

} // namespace symopt
