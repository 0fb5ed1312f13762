#include "saddleflow/common.hpp"

#include <Eigen/SVD>

#include <array>
#include <charconv>
#include <cmath>

namespace saddleflow {

Matrix null_space(const Matrix& m, double tol) {
    const Eigen::Index cols = m.cols();
    if (cols == 0) return Matrix(0, 0);
    if (m.rows() == 0) return Matrix::Identity(cols, cols);

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) ++rank;
    }
    return svd.matrixV().rightCols(cols - rank);
}

Matrix orthonormal_columns(const Matrix& m, double tol) {
    if (m.cols() == 0 || m.rows() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cut = tol * std::max(1.0, s(0));
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    (void)ec;
    return std::string(buf.data(), end);
}

}  // namespace saddleflow
