#include "symopt/mat.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace symopt {

Mat::Mat(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw InvalidInput("Mat: negative dimension");
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Mat::Mat(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0) throw InvalidInput("Mat: negative dimension");
    if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ShapeError("Mat: data length does not match rows*cols");
    for (double v : data_)
        if (!std::isfinite(v)) throw InvalidInput("Mat: non-finite entry");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    data_.reserve(static_cast<std::size_t>(rows_) * cols_);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols_) throw ShapeError("Mat: ragged initializer");
        for (double v : r) {
            if (!std::isfinite(v)) throw InvalidInput("Mat: non-finite entry");
            data_.push_back(v);
        }
    }
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat& Mat::operator+=(const Mat& rhs) {
    if (!same_shape(rhs)) throw ShapeError("Mat+=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& rhs) {
    if (!same_shape(rhs)) throw ShapeError("Mat-=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Mat operator+(Mat lhs, const Mat& rhs) { return lhs += rhs; }
Mat operator-(Mat lhs, const Mat& rhs) { return lhs -= rhs; }
Mat operator*(double s, Mat rhs) { return rhs *= s; }

Mat operator*(const Mat& lhs, const Mat& rhs) {
    if (lhs.cols() != rhs.rows()) throw ShapeError("Mat*: inner dimensions differ");
    Mat out(lhs.rows(), rhs.cols());
    for (int i = 0; i < lhs.rows(); ++i) {
        for (int k = 0; k < lhs.cols(); ++k) {
            const double a = lhs(i, k);
            if (a == 0.0) continue;
            for (int j = 0; j < rhs.cols(); ++j) out(i, j) += a * rhs(k, j);
        }
    }
    return out;
}

Mat transpose(const Mat& a) {
    Mat out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

double dot(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw ShapeError("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

double fro_norm(const Mat& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::fabs(v));
    return m;
}

bool is_finite(const Mat& a) {
    for (double v : a.data())
        if (!std::isfinite(v)) return false;
    return true;
}

bool is_zero(const Mat& a) {
    for (double v : a.data())
        if (v != 0.0) return false;
    return true;
}

double row_norm(const Mat& a, int i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double max_abs_diff(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

Mat center_rows(const Mat& a) {
    Mat out = a;
    for (int j = 0; j < a.cols(); ++j) {
        double mean = 0.0;
        for (int i = 0; i < a.rows(); ++i) mean += a(i, j);
        mean /= a.rows();
        for (int i = 0; i < a.rows(); ++i) out(i, j) -= mean;
    }
    return out;
}

Mat column_sums(const Mat& a) {
    Mat out(1, a.cols());
    for (int j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < a.rows(); ++i) s += a(i, j);
        out(0, j) = s;
    }
    return out;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

Mat read_mat(std::istream& in) {
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw IoError("read_mat: missing header");
    if (rows < 0 || cols < 0) throw IoError("read_mat: negative dimension");
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(rows) * cols);
    for (long k = 0; k < static_cast<long>(rows) * cols; ++k) {
        double v;
        if (!(in >> v)) throw IoError("read_mat: truncated data");
        data.push_back(v);
    }
    return Mat(rows, cols, std::move(data));
}

Mat read_mat_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_mat_file: cannot open " + path);
    return read_mat(in);
}

void write_mat(std::ostream& out, const Mat& a) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(a(i, j));
        }
        out << '\n';
    }
}

void write_mat_file(const std::string& path, const Mat& a) {
    std::ofstream out(path);
    if (!out) throw IoError("write_mat_file: cannot open " + path);
    write_mat(out, a);
}

} // namespace symopt
