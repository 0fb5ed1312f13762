#pragma once

#include "saddleflow/common.hpp"

#include <initializer_list>
#include <limits>
#include <random>

namespace testutil {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline saddleflow::Vector vec(std::initializer_list<double> v) {
    saddleflow::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline saddleflow::Vector random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    saddleflow::Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

}  // namespace testutil
