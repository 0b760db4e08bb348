#include "sbr/linsolve.hpp"

#include "sbr/errors.hpp"

#include <Eigen/SparseCore>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace sbr {

namespace {

constexpr double kSparseTolerance = 1e-10;
constexpr int kRefinementSteps = 4;
constexpr double kIterativeTolerance = 1e-13;
constexpr int kMaxIterations = 2000;

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;
using DenseVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

double inf_norm(std::span<const Complex> v) {
    double n = 0.0;
    for (const Complex &x : v)
        n = std::max(n, std::abs(x));
    return n;
}

double inf_norm(const DenseVector &v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

} // namespace

void TridiagonalSystem::validate() const {
    const std::size_t n = diagonal.size();
    if (rhs.size() != n)
        throw DomainError("tridiagonal rhs length does not match diagonal");
    const std::size_t off = n == 0 ? 0 : n - 1;
    if (lower.size() != off || upper.size() != off)
        throw DomainError("tridiagonal off-diagonal lengths must be N-1");
}

void SparseSystem::validate() const {
    if (rhs.size() != dimension)
        throw DomainError("sparse rhs length does not match dimension");
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    keys.reserve(entries.size());
    std::vector<char> has_diagonal(dimension, 0);
    for (const auto &e : entries) {
        if (e.row >= dimension || e.col >= dimension)
            throw DomainError("sparse entry index out of range");
        if (e.row == e.col)
            has_diagonal[e.row] = 1;
        keys.emplace_back(e.row, e.col);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw DomainError("sparse system has a duplicate (row, col) entry");
    for (std::size_t r = 0; r < dimension; ++r)
        if (!has_diagonal[r])
            throw SingularityError(r, "sparse row " + std::to_string(r) +
                                          " has no diagonal entry");
}

ComplexVector solve_tridiagonal(const TridiagonalSystem &sys) {
    sys.validate();
    const std::size_t n = sys.size();
    if (n == 0)
        return {};
    ComplexVector c(n, 0.0);
    ComplexVector d(n, 0.0);
    Complex pivot = sys.diagonal[0];
    if (pivot == Complex(0.0))
        throw SingularityError(0, "zero pivot in tridiagonal row 0");
    if (n > 1)
        c[0] = sys.upper[0] / pivot;
    d[0] = sys.rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = sys.diagonal[i] - sys.lower[i - 1] * c[i - 1];
        if (pivot == Complex(0.0))
            throw SingularityError(i, "zero pivot in tridiagonal row " +
                                          std::to_string(i));
        if (i + 1 < n)
            c[i] = sys.upper[i] / pivot;
        d[i] = (sys.rhs[i] - sys.lower[i - 1] * d[i - 1]) / pivot;
    }
    ComplexVector x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

namespace {

ComplexVector lu_solve(const SparseMatrix &matrix, const DenseVector &b) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(matrix);
    lu.factorize(matrix);
    if (lu.info() != Eigen::Success)
        throw SingularityError(0, "sparse LU failed: " + lu.lastErrorMessage());
    DenseVector x = lu.solve(b);
    const double scale = std::max(1.0, inf_norm(b));
    for (int step = 0;; ++step) {
        DenseVector r = b - matrix * x;
        const double residual = inf_norm(r) / scale;
        if (std::isfinite(residual) && residual <= kSparseTolerance)
            break;
        if (step == kRefinementSteps || !std::isfinite(residual))
            throw ConvergenceError(residual, "sparse solve residual " +
                                                 std::to_string(residual) +
                                                 " above tolerance");
        x += lu.solve(r);
    }
    return ComplexVector(x.data(), x.data() + x.size());
}

SparseMatrix build_matrix(std::size_t dimension, std::span<const SparseEntry> entries) {
    const auto n = static_cast<Eigen::Index>(dimension);
    std::vector<Eigen::Triplet<Complex, int>> triplets;
    triplets.reserve(entries.size());
    for (const auto &e : entries)
        triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

} // namespace

struct SparseSolver::Impl {
    SparseMatrix matrix;
    Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<Complex>> iterative;
};

SparseSolver::SparseSolver(std::size_t dimension, std::span<const SparseEntry> entries)
    : m_impl(std::make_unique<Impl>()) {
    m_impl->matrix = build_matrix(dimension, entries);
    if (dimension == 0)
        return;
    for (Eigen::Index i = 0; i < m_impl->matrix.rows(); ++i)
        if (m_impl->matrix.coeff(i, i) == Complex(0.0))
            throw SingularityError(static_cast<std::size_t>(i),
                                   "zero diagonal in sparse row " + std::to_string(i));
    m_impl->iterative.setTolerance(kIterativeTolerance);
    m_impl->iterative.setMaxIterations(kMaxIterations);
    m_impl->iterative.compute(m_impl->matrix);
}

SparseSolver::~SparseSolver() = default;
SparseSolver::SparseSolver(SparseSolver &&) noexcept = default;
SparseSolver &SparseSolver::operator=(SparseSolver &&) noexcept = default;

std::size_t SparseSolver::dimension() const {
    return static_cast<std::size_t>(m_impl->matrix.rows());
}

ComplexVector SparseSolver::solve(std::span<const Complex> rhs) const {
    if (rhs.size() != dimension())
        throw DomainError("rhs length does not match operator dimension");
    if (rhs.empty())
        return {};
    const Eigen::Map<const DenseVector> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    if (inf_norm(b) == 0.0)
        return ComplexVector(rhs.size(), 0.0);
    const DenseVector x = m_impl->iterative.solve(b);
    const double residual = inf_norm(DenseVector(b - m_impl->matrix * x)) /
                            std::max(1.0, inf_norm(b));
    if (m_impl->iterative.info() == Eigen::Success && std::isfinite(residual) &&
        residual <= kSparseTolerance)
        return ComplexVector(x.data(), x.data() + x.size());
    return lu_solve(m_impl->matrix, b);
}

ComplexVector solve_sparse(const SparseSystem &sys) {
    sys.validate();
    const SparseSolver solver(sys.dimension, sys.entries);
    return solver.solve(sys.rhs);
}

ComplexVector solve_sparse_direct(const SparseSystem &sys) {
    sys.validate();
    if (sys.dimension == 0)
        return {};
    const Eigen::Map<const DenseVector> b(sys.rhs.data(),
                                          static_cast<Eigen::Index>(sys.rhs.size()));
    return lu_solve(build_matrix(sys.dimension, sys.entries), b);
}

double relative_residual(const SparseSystem &sys, std::span<const Complex> x) {
    ComplexVector r(sys.rhs.begin(), sys.rhs.end());
    for (const auto &e : sys.entries)
        r[e.row] -= e.value * x[e.col];
    return inf_norm(r) / std::max(1.0, inf_norm(sys.rhs));
}

double relative_residual(const TridiagonalSystem &sys, std::span<const Complex> x) {
    const std::size_t n = sys.size();
    ComplexVector r(sys.rhs.begin(), sys.rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        r[i] -= sys.diagonal[i] * x[i];
        if (i > 0)
            r[i] -= sys.lower[i - 1] * x[i - 1];
        if (i + 1 < n)
            r[i] -= sys.upper[i] * x[i + 1];
    }
    return inf_norm(r) / std::max(1.0, inf_norm(sys.rhs));
}

} // namespace sbr
