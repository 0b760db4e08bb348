#ifndef SBR_LINSOLVE_HPP
#define SBR_LINSOLVE_HPP

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace sbr {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Tridiagonal system: lower[i] couples row i+1 to x_i, upper[i] couples row i
/// to x_{i+1}.
struct TridiagonalSystem {
    ComplexVector lower;
    ComplexVector diagonal;
    ComplexVector upper;
    ComplexVector rhs;

    std::size_t size() const { return diagonal.size(); }
    void validate() const;
};

struct SparseEntry {
    std::size_t row;
    std::size_t col;
    Complex value;
};

struct SparseSystem {
    std::size_t dimension = 0;
    std::vector<SparseEntry> entries;
    ComplexVector rhs;

    void validate() const;
};

/// Thomas elimination. Throws SingularityError on a zero pivot.
ComplexVector solve_tridiagonal(const TridiagonalSystem &sys);

ComplexVector solve_sparse(const SparseSystem &sys);

/// Prepared square sparse operator, reusable across right-hand sides.
/// Solves with Jacobi-preconditioned BiCGSTAB and falls back to sparse LU with
/// iterative refinement when the iteration stalls. The result has relative
/// residual at most 1e-10, otherwise ConvergenceError is thrown.
class SparseSolver {
  public:
    SparseSolver(std::size_t dimension, std::span<const SparseEntry> entries);
    ~SparseSolver();
    SparseSolver(SparseSolver &&) noexcept;
    SparseSolver &operator=(SparseSolver &&) noexcept;

    std::size_t dimension() const;
    ComplexVector solve(std::span<const Complex> rhs) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
};

/// Direct sparse LU with iterative refinement; the fallback of SparseSolver.
ComplexVector solve_sparse_direct(const SparseSystem &sys);

/// Infinity-norm residual ||Ax - b|| / max(1, ||b||).
double relative_residual(const SparseSystem &sys, std::span<const Complex> x);
double relative_residual(const TridiagonalSystem &sys, std::span<const Complex> x);

} // namespace sbr

#endif
