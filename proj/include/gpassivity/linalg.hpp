#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpassivity/errors.hpp"

namespace gpassivity {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

enum class Axis { X, Y, Z };

// One product of single-site Pauli matrices with a real coefficient.
// An empty factor list denotes coefficient * identity.
struct PauliTerm {
    double coefficient = 0.0;
    std::vector<std::pair<int, Axis>> factors;
};

// Eigendecomposition of a Hermitian operator: A = V diag(w) V^dag,
// eigenvalues ascending, V unitary.
struct EigenSystem {
    RVec eigenvalues;
    Mat eigenvectors;
};

// Dense Hermitian operator on a tensor-product space. Immutable after
// construction; the eigendecomposition is computed on first use and shared
// between copies.
class HermitianOperator {
  public:
    HermitianOperator() = default;
    HermitianOperator(Mat matrix, std::vector<int> dims);

    // Build from a known eigendecomposition (kept as the cache, sorted
    // ascending), so spectral chains like ln(exp(A)) stay exact.
    static HermitianOperator from_eigensystem(EigenSystem es, std::vector<int> dims);

    const Mat& matrix() const { return matrix_; }
    const std::vector<int>& dims() const { return dims_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }

    // Lazy, idempotent; safe to call from several threads on shared copies.
    const EigenSystem& eig() const;

    double trace() const { return matrix_.trace().real(); }

  protected:
    Mat matrix_;
    std::vector<int> dims_;

  private:
    struct EigCache {
        std::mutex mutex;
        std::optional<EigenSystem> value;
    };
    std::shared_ptr<EigCache> cache_ = std::make_shared<EigCache>();
};

// A HermitianOperator that also satisfies trace 1 and positive
// semidefiniteness (eigenvalues >= -1e-10).
class DensityMatrix : public HermitianOperator {
  public:
    DensityMatrix() = default;
    DensityMatrix(Mat matrix, std::vector<int> dims);
    explicit DensityMatrix(HermitianOperator op);
};

Mat pauli_matrix(Axis axis);
Mat sigma_plus();   // |0><1|, raises sigma_z
Mat sigma_minus();  // |1><0|, lowers sigma_z (decay towards the sigma_z ground state)

// Sum of Pauli terms embedded on num_sites qubits; dims = [2]*num_sites.
HermitianOperator build_pauli_operator(const std::vector<PauliTerm>& terms, int num_sites);

// I x ... x op x ... x I with op at factor `site` of `dims`.
HermitianOperator embed_local(const HermitianOperator& op, int site, const std::vector<int>& dims);
Mat embed_local(const Mat& op, int site, const std::vector<int>& dims);

// Embed an operator living on the (ordered) factor subset `sites` into the
// full space, identity elsewhere. The operator's factor order must match
// `sites` order.
Mat embed_on_factors(const Mat& op, const std::vector<int>& sites, const std::vector<int>& dims);

EigenSystem eig_hermitian(const HermitianOperator& a);

struct FunctionDomain {
    double min = 0.0;
    bool exclusive_min = false;  // true for ln-like functions
};

// V diag(f(w)) V^dag. With a domain, eigenvalues in (-1e-10, 0) are clipped
// to 0 first; anything still outside is a DomainError (SingularStateError
// for exclusive minima).
HermitianOperator matrix_function(const HermitianOperator& a,
                                  const std::function<double(double)>& f,
                                  const std::optional<FunctionDomain>& domain = std::nullopt);

// exp(-i H t)
Mat unitary_from_hamiltonian(const HermitianOperator& h, double t);

// Reduced operator on the kept factors (in their original order).
HermitianOperator partial_trace(const HermitianOperator& m, const std::vector<int>& keep);
Mat partial_trace(const Mat& m, const std::vector<int>& keep, const std::vector<int>& dims);

// Largest |eigenvalue|.
double operator_norm(const HermitianOperator& a);

// Re tr(rho A); both arguments on the same space.
double expectation(const Mat& rho, const Mat& a);

Mat kron(const Mat& a, const Mat& b);

bool is_unitary(const Mat& u, double tol = 1e-10);

}  // namespace gpassivity
