// SPDX-License-Identifier: Apache-2.0
//
// stlab: adaptive space-time receiver laboratory for multipath DS-CDMA downlinks
// Copyright (C) 2026 stlab contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference computations for the test suite. Everything here goes
// through Eigen so that library results are checked against a separate code
// path, not against themselves.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "stlab/complexla.hpp"

namespace oracle {

using stlab::la::ComplexMatrix;
using stlab::la::ComplexVector;
using stlab::la::cplx;

inline Eigen::MatrixXcd to_eigen(const ComplexMatrix& a) {
    Eigen::MatrixXcd m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
    return m;
}

inline Eigen::VectorXcd to_eigen(const ComplexVector& v) {
    Eigen::VectorXcd r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        r(static_cast<Eigen::Index>(i)) = v[i];
    return r;
}

inline ComplexMatrix from_eigen(const Eigen::MatrixXcd& m) {
    ComplexMatrix a(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return a;
}

inline ComplexVector from_eigen(const Eigen::VectorXcd& v) {
    ComplexVector r(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        r[static_cast<std::size_t>(i)] = v(i);
    return r;
}

inline ComplexMatrix random_complex(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexMatrix a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            a(i, j) = cplx(nd(rng), nd(rng));
    return a;
}

inline ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexVector v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = cplx(nd(rng), nd(rng));
    return v;
}

// Random Hermitian positive definite matrix M^H M + ridge * I.
inline ComplexMatrix random_hpd(std::size_t n, std::uint64_t seed, double ridge = 0.1) {
    const ComplexMatrix m = random_complex(n, n, seed);
    const Eigen::MatrixXcd e = to_eigen(m);
    Eigen::MatrixXcd h = e.adjoint() * e;
    h += ridge * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
    return from_eigen(h);
}

inline ComplexMatrix inverse(const ComplexMatrix& a) {
    const Eigen::MatrixXcd inv = to_eigen(a).inverse();
    return from_eigen(inv);
}

inline ComplexVector solve(const ComplexMatrix& a, const ComplexVector& b) {
    const Eigen::VectorXcd x = to_eigen(a).ldlt().solve(to_eigen(b));
    return from_eigen(x);
}

struct EigOracle {
    std::vector<double> values;      // ascending
    Eigen::MatrixXcd vectors;        // columns in ascending order
};

inline EigOracle eig_hermitian(const ComplexMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(a));
    EigOracle out;
    out.vectors = es.eigenvectors();
    out.values.resize(static_cast<std::size_t>(es.eigenvalues().size()));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        out.values[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

inline std::vector<double> singular_values(const ComplexMatrix& a) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a));
    std::vector<double> sv(static_cast<std::size_t>(svd.singularValues().size()));
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        sv[static_cast<std::size_t>(i)] = svd.singularValues()(i);
    return sv;
}

// |<a, b>| / (|a| |b|): phase-invariant alignment of two vectors.
inline double alignment(const ComplexVector& a, const ComplexVector& b) {
    const double na = stlab::la::norm2(a);
    const double nb = stlab::la::norm2(b);
    if (na <= 0.0 || nb <= 0.0)
        return 0.0;
    return std::abs(stlab::la::hdot(a, b)) / (na * nb);
}

inline double rel_frob_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return stlab::la::frobenius(stlab::la::msub(a, b)) / std::max(1e-300, stlab::la::frobenius(b));
}

}  // namespace oracle
