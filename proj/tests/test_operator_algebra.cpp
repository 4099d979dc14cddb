// Copyright 2026 The nvsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nvsc/operator_algebra.hpp"
#include "test_support.hpp"

using namespace nvsc;
using nvsc::testing::Generator;
using nvsc::testing::max_abs;

namespace {

SystemLayout four_qubits() { return SystemLayout({{"nv", 2}, {"sc", 2}, {"opt", 2}, {"mw", 2}}); }

}  // namespace

TEST_SUITE("layout") {
    TEST_CASE("canonical order and total dimension") {
        const auto layout = SystemLayout::canonical(3, 5);
        REQUIRE(layout.size() == 4);
        CHECK(layout.subsystems()[0].label == "nv");
        CHECK(layout.subsystems()[3].label == "mw");
        CHECK(layout.total_dim() == 60);
        CHECK(layout.index_of("opt") == 2);
    }

    TEST_CASE("rejects duplicates, empty factors and unknown labels") {
        CHECK_THROWS_AS(SystemLayout({{"a", 2}, {"a", 3}}), std::invalid_argument);
        CHECK_THROWS_AS(SystemLayout({{"a", 0}}), std::invalid_argument);
        CHECK_THROWS_AS(SystemLayout::canonical(2, 2).index_of("phonon"), std::invalid_argument);
    }

    TEST_CASE("digits and index are inverse") {
        const auto layout = SystemLayout::canonical(3, 4);
        for (std::size_t i = 0; i < layout.total_dim(); ++i) CHECK(layout.index(layout.digits(i)) == i);
    }
}

TEST_SUITE("kron") {
    TEST_CASE("identity and Pauli products") {
        const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
        CHECK(kron(i2, i2) == ComplexMatrix::Identity(4, 4));

        const ComplexMatrix xx = kron(sigma_x(), sigma_x());
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) CHECK(xx(i, j) == Complex(i + j == 3 ? 1.0 : 0.0, 0.0));
        }
    }

    TEST_CASE("entrywise definition and mixed product on random inputs") {
        Generator gen(11);
        const ComplexMatrix a = gen.matrix(2, 3);
        const ComplexMatrix b = gen.matrix(4, 5);
        const ComplexMatrix ab = kron(a, b);
        REQUIRE(ab.rows() == 8);
        REQUIRE(ab.cols() == 15);
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                for (Eigen::Index k = 0; k < 4; ++k)
                    for (Eigen::Index l = 0; l < 5; ++l) CHECK(ab(i * 4 + k, j * 5 + l) == a(i, j) * b(k, l));

        const ComplexMatrix c = gen.matrix(3, 2);
        const ComplexMatrix d = gen.matrix(5, 3);
        CHECK(max_abs(ab * kron(c, d) - kron(a * c, b * d)) <= 1e-12);
    }

    TEST_CASE("mixed-product property on random 2x2 and 3x3 factors") {
        Generator gen(12);
        for (int trial = 0; trial < 20; ++trial) {
            const ComplexMatrix a = gen.matrix(2, 2), c = gen.matrix(2, 2);
            const ComplexMatrix b = gen.matrix(3, 3), d = gen.matrix(3, 3);
            CHECK(max_abs(kron(a, b) * kron(c, d) - kron(a * c, b * d)) <= 1e-12);
        }
    }

    TEST_CASE("sparse kron matches dense kron exactly") {
        Generator gen(13);
        const ComplexMatrix a = gen.matrix(3, 2);
        const ComplexMatrix b = gen.matrix(2, 4);
        CHECK(to_dense(kron(to_sparse(a), to_sparse(b))) == kron(a, b));
    }
}

TEST_SUITE("sparse") {
    TEST_CASE("dense round trip is exact and canonical") {
        Generator gen(21);
        ComplexMatrix a = gen.matrix(6, 6);
        a(1, 2) = 0.0;
        a(4, 4) = 0.0;
        const SparseOperator s = to_sparse(a);
        CHECK(s.nonZeros() == 34);
        CHECK(to_dense(s) == a);
    }

    TEST_CASE("sparse and dense application agree") {
        Generator gen(22);
        const auto layout = SystemLayout::canonical(3, 3);
        const SparseOperator s = embed(annihilation(3), "opt", layout) + embed(gen.hermitian(2), "sc", layout);
        const ComplexMatrix dense = to_dense(s);
        for (int trial = 0; trial < 10; ++trial) {
            const ComplexVector v = gen.vector(36);
            CHECK((s * v - dense * v).norm() <= 1e-12);
        }
    }
}

TEST_SUITE("embed") {
    TEST_CASE("sigma_z on the first factor") {
        const ComplexMatrix z = to_dense(embed(sigma_z(), "nv", four_qubits()));
        for (Eigen::Index i = 0; i < 16; ++i) {
            CHECK(z(i, i) == Complex(i < 8 ? 1.0 : -1.0, 0.0));
        }
        CHECK(max_abs(z - ComplexMatrix(z.diagonal().asDiagonal())) == 0.0);
    }

    TEST_CASE("identity embeds to identity") {
        const auto layout = SystemLayout::canonical(3, 4);
        CHECK(to_dense(embed(ComplexMatrix::Identity(3, 3), "opt", layout)) == ComplexMatrix::Identity(48, 48));
    }

    TEST_CASE("disjoint subsystems commute") {
        Generator gen(31);
        const auto layout = SystemLayout::canonical(3, 2);
        for (int trial = 0; trial < 5; ++trial) {
            const SparseOperator x = embed(gen.matrix(2, 2), "nv", layout);
            const SparseOperator y = embed(gen.matrix(2, 2), "sc", layout);
            CHECK(max_abs(to_dense(SparseOperator(x * y - y * x))) <= 1e-12);
        }
    }

    TEST_CASE("preserves Hermiticity and spectral norm") {
        Generator gen(32);
        const auto layout = SystemLayout::canonical(3, 2);
        const ComplexMatrix h = gen.hermitian(3);
        const ComplexMatrix e = to_dense(embed(h, "opt", layout));
        CHECK(hermiticity_error(e) <= 1e-15);
        CHECK(std::abs(nvsc::testing::spectral_norm(e) - nvsc::testing::spectral_norm(h)) <= 1e-12);
    }

    TEST_CASE("errors") {
        const auto layout = SystemLayout::canonical(3, 2);
        CHECK_THROWS_AS(embed(sigma_x(), "phonon", layout), std::invalid_argument);
        CHECK_THROWS_AS(embed(sigma_x(), "opt", layout), std::invalid_argument);
    }
}

TEST_SUITE("annihilation") {
    TEST_CASE("matrix elements") {
        const ComplexMatrix a = annihilation(3);
        ComplexVector two = ComplexVector::Zero(3);
        two(2) = 1.0;
        ComplexVector expected = ComplexVector::Zero(3);
        expected(1) = std::sqrt(2.0);
        CHECK((a * two - expected).norm() <= 1e-15);
        CHECK(annihilation(2) == sigma_minus());
    }

    TEST_CASE("number operator is diag(0..n-1)") {
        const ComplexMatrix a = annihilation(6);
        const ComplexMatrix n = a.adjoint() * a;
        for (Eigen::Index k = 0; k < 6; ++k) CHECK(std::abs(n(k, k) - Complex(double(k), 0.0)) <= 1e-14);
        CHECK(max_abs(n - ComplexMatrix(n.diagonal().asDiagonal())) == 0.0);
    }

    TEST_CASE("truncated commutator deviates at the top level") {
        for (std::size_t n : {2u, 3u, 7u}) {
            const ComplexMatrix a = annihilation(n);
            ComplexMatrix expected = ComplexMatrix::Identity(Eigen::Index(n), Eigen::Index(n));
            expected(Eigen::Index(n) - 1, Eigen::Index(n) - 1) -= double(n);
            CHECK(max_abs(a * a.adjoint() - a.adjoint() * a - expected) <= 1e-13);
        }
    }

    TEST_CASE("rejects n < 2") { CHECK_THROWS_AS(annihilation(1), std::invalid_argument); }
}

TEST_SUITE("partial_trace") {
    const std::vector<std::string> keep_a{"a"};

    TEST_CASE("Bell state marginal is maximally mixed") {
        const SystemLayout layout({{"a", 2}, {"b", 2}});
        ComplexVector bell = ComplexVector::Zero(4);
        bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
        const auto reduced = partial_trace(DensityMatrix::from_pure(layout, bell), keep_a);
        CHECK(max_abs(reduced.matrix() - 0.5 * ComplexMatrix::Identity(2, 2)) <= 1e-15);
        CHECK(reduced.layout() == SystemLayout({{"a", 2}}));
    }

    TEST_CASE("product state returns its factor") {
        Generator gen(41);
        const ComplexMatrix r1 = gen.density(2);
        const ComplexMatrix r2 = gen.density(3);
        const SystemLayout layout({{"a", 2}, {"b", 3}});
        const auto reduced = partial_trace(DensityMatrix(layout, kron(r1, r2)), keep_a);
        CHECK(max_abs(reduced.matrix() - r1) <= 1e-14);
    }

    TEST_CASE("trace preserved and subsystem order kept") {
        Generator gen(42);
        const auto layout = SystemLayout::canonical(3, 2);
        const DensityMatrix rho(layout, gen.density(24));
        const std::vector<std::string> keep{"mw", "nv"};
        const auto reduced = partial_trace(rho, keep);
        CHECK(reduced.layout() == SystemLayout({{"nv", 2}, {"mw", 2}}));
        CHECK(std::abs(reduced.trace() - rho.trace()) <= 1e-14);
    }

    TEST_CASE("pure product state keeps its pure factor") {
        Generator gen(43);
        const auto layout = SystemLayout::canonical(3, 2);
        const ComplexVector nv = gen.unit_vector(2), sc = gen.unit_vector(2);
        const ComplexVector opt = gen.unit_vector(3), mw = gen.unit_vector(2);
        const ComplexVector psi = kron(kron(kron(nv, sc), opt), mw);
        const auto rho = DensityMatrix::from_pure(layout, psi);
        const std::vector<std::string> keep{"opt"};
        const auto reduced = partial_trace(rho, keep);
        const double fidelity = opt.dot(reduced.matrix() * opt).real();
        CHECK(std::abs(fidelity - 1.0) <= 1e-12);
    }

    TEST_CASE("errors") {
        const auto layout = SystemLayout::canonical(2, 2);
        const DensityMatrix rho(layout, ComplexMatrix::Identity(16, 16) / 16.0);
        const std::vector<std::string> bad{"phonon"};
        const std::vector<std::string> none;
        CHECK_THROWS_AS(partial_trace(rho, bad), std::invalid_argument);
        CHECK_THROWS_AS(partial_trace(rho, none), std::invalid_argument);
    }
}

TEST_SUITE("spectral") {
    TEST_CASE("herm_eig sorts descending") {
        ComplexMatrix d = ComplexMatrix::Zero(3, 3);
        d(0, 0) = 1.0;
        d(1, 1) = 3.0;
        d(2, 2) = 2.0;
        const auto eig = herm_eig(d);
        CHECK(eig.values == std::vector<double>{3.0, 2.0, 1.0});

        const auto x = herm_eig(sigma_x());
        CHECK(x.values[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(x.values[1] == doctest::Approx(-1.0).epsilon(1e-14));
    }

    TEST_CASE("herm_eig reconstructs random Hermitian matrices") {
        Generator gen(51);
        for (Eigen::Index n : {2, 5, 12}) {
            const ComplexMatrix a = gen.hermitian(n);
            const auto eig = herm_eig(a);
            const double scale = nvsc::testing::spectral_norm(a);
            Eigen::VectorXd lambda(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                lambda(i) = eig.values[std::size_t(i)];
                if (i > 0) CHECK(eig.values[std::size_t(i)] <= eig.values[std::size_t(i - 1)]);
                CHECK((a * eig.vectors.col(i) - lambda(i) * eig.vectors.col(i)).norm() <= 1e-9 * scale);
            }
            CHECK(max_abs(eig.vectors.adjoint() * eig.vectors - ComplexMatrix::Identity(n, n)) <= 1e-9);
            CHECK(max_abs(eig.vectors * lambda.asDiagonal() * eig.vectors.adjoint() - a) <= 1e-12);
        }
    }

    TEST_CASE("herm_eig rejects non-Hermitian input") {
        CHECK_THROWS_AS(herm_eig(sigma_minus()), std::domain_error);
    }

    TEST_CASE("psd_sqrt closed forms") {
        CHECK(max_abs(psd_sqrt(ComplexMatrix::Identity(3, 3)) - ComplexMatrix::Identity(3, 3)) <= 1e-14);
        ComplexMatrix d = ComplexMatrix::Zero(2, 2);
        d(0, 0) = 4.0;
        d(1, 1) = 9.0;
        ComplexMatrix root = ComplexMatrix::Zero(2, 2);
        root(0, 0) = 2.0;
        root(1, 1) = 3.0;
        CHECK(max_abs(psd_sqrt(d) - root) <= 1e-14);
    }

    TEST_CASE("psd_sqrt squares back and composes") {
        Generator gen(52);
        for (Eigen::Index n : {2, 4, 9}) {
            const ComplexMatrix a = gen.density(n) * 3.0;
            const double scale = nvsc::testing::spectral_norm(a);
            const ComplexMatrix s = psd_sqrt(a);
            CHECK(hermiticity_error(s) <= 1e-13);
            CHECK(max_abs(s * s - a) <= 1e-8 * scale);
            const ComplexMatrix q = psd_sqrt(s);
            CHECK(max_abs(q * q * q * q - a) <= 1e-7 * scale);
        }
    }

    TEST_CASE("psd_sqrt clamps tiny negatives and rejects large ones") {
        ComplexMatrix d = ComplexMatrix::Zero(2, 2);
        d(0, 0) = 1.0;
        d(1, 1) = -5e-11;
        CHECK(psd_sqrt(d)(1, 1) == Complex(0.0, 0.0));
        d(1, 1) = -1e-6;
        CHECK_THROWS_AS(psd_sqrt(d), std::domain_error);
    }

    TEST_CASE("expm closed forms") {
        CHECK(max_abs(expm(ComplexMatrix::Zero(4, 4)) - ComplexMatrix::Identity(4, 4)) == 0.0);

        ComplexMatrix d = ComplexMatrix::Zero(3, 3);
        d(0, 0) = 0.5;
        d(1, 1) = -2.0;
        d(2, 2) = Complex(0.0, 1.0);
        const ComplexMatrix e = expm(d);
        for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(e(i, i) - std::exp(d(i, i))) <= 1e-14);

        const ComplexMatrix rot = expm(-kI * (std::numbers::pi / 2) * sigma_x());
        CHECK(max_abs(rot - (-kI) * sigma_x()) <= 1e-10);
    }

    TEST_CASE("expm matches a long Taylor series on small-norm matrices") {
        Generator gen(53);
        for (int trial = 0; trial < 5; ++trial) {
            const ComplexMatrix a = 0.4 * gen.matrix(5, 5);
            ComplexMatrix term = ComplexMatrix::Identity(5, 5);
            ComplexMatrix sum = term;
            for (int k = 1; k < 60; ++k) {
                term = term * a / double(k);
                sum += term;
            }
            CHECK(max_abs(expm(a) - sum) <= 1e-10 * max_abs(sum));
        }
    }
}

TEST_SUITE("density_matrix") {
    TEST_CASE("shape and validity checks") {
        const auto layout = SystemLayout::canonical(2, 2);
        CHECK_THROWS_AS(DensityMatrix(layout, ComplexMatrix::Identity(4, 4)), std::invalid_argument);

        ComplexMatrix half = ComplexMatrix::Identity(16, 16) / 32.0;
        CHECK_THROWS_AS(DensityMatrix(layout, half).require_valid(), std::domain_error);

        ComplexMatrix skew = ComplexMatrix::Identity(16, 16) / 16.0;
        skew(0, 1) = 0.01;
        CHECK_THROWS_AS(DensityMatrix(layout, skew).require_valid(), std::domain_error);

        CHECK_NOTHROW(DensityMatrix(layout, ComplexMatrix::Identity(16, 16) / 16.0).require_valid());
    }
}
