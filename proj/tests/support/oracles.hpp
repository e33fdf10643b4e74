#pragma once

// Independent reference computations used by the test suites. Nothing here calls
// into the library code under test except for plain data types.

#include "elastovb/forward_model.hpp"
#include "elastovb/mesh.hpp"

#include <random>

namespace oracle {

using elastovb::Index;
using elastovb::Mat;
using elastovb::Vec;

/// Dense plane-strain Q4 assembly with 3x3 Gauss points and a dense LU solve.
Vec dense_fem_solve(const elastovb::Mesh2D& mesh, const elastovb::BoundarySpec& bc, const Vec& modulus,
                    double poisson);

/// Central differences of model.evaluate(psi).y, one column per parameter.
Mat fd_jacobian(const elastovb::ForwardModel& model, const Vec& psi, double h);

Mat random_matrix(Index rows, Index cols, std::mt19937_64& rng);
Mat random_orthonormal(Index d, Index p, std::mt19937_64& rng);
Mat random_skew(Index d, std::mt19937_64& rng);

/// Largest |a_ij - b_ij| divided by the largest |b_ij|.
double max_rel(const Mat& a, const Mat& b);

}  // namespace oracle
