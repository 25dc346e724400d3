#include "gpassivity/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace gpassivity {

namespace {

long checked_total_dim(const std::vector<int>& dims) {
    long total = 1;
    for (int d : dims) {
        if (d <= 0) throw Error("tensor factor dimensions must be positive");
        total *= d;
    }
    return total;
}

// Mixed-radix digits of a flat index, most significant factor first.
void index_to_digits(long index, const std::vector<int>& dims, std::vector<int>& digits) {
    digits.resize(dims.size());
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
        digits[k] = static_cast<int>(index % dims[k]);
        index /= dims[k];
    }
}

long digits_to_index(const std::vector<int>& digits, const std::vector<int>& dims) {
    long index = 0;
    for (size_t k = 0; k < dims.size(); ++k) index = index * dims[k] + digits[k];
    return index;
}

}  // namespace

HermitianOperator::HermitianOperator(Mat matrix, std::vector<int> dims)
    : matrix_(std::move(matrix)), dims_(std::move(dims)) {
    if (matrix_.rows() != matrix_.cols()) throw Error("operator matrix must be square");
    if (matrix_.rows() != checked_total_dim(dims_))
        throw Error("matrix size does not match the product of tensor-factor dimensions");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    const double dev = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (dev > 1e-12 * scale) {
        std::ostringstream msg;
        msg << "matrix is not Hermitian: max |M - M^dag| = " << dev;
        throw Error(msg.str());
    }
    matrix_ = ((matrix_ + matrix_.adjoint()) / 2.0).eval();
}

HermitianOperator HermitianOperator::from_eigensystem(EigenSystem es, std::vector<int> dims) {
    const int d = static_cast<int>(es.eigenvalues.size());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return es.eigenvalues[a] < es.eigenvalues[b]; });
    EigenSystem sorted;
    sorted.eigenvalues.resize(d);
    sorted.eigenvectors.resize(d, d);
    for (int k = 0; k < d; ++k) {
        sorted.eigenvalues[k] = es.eigenvalues[order[k]];
        sorted.eigenvectors.col(k) = es.eigenvectors.col(order[k]);
    }
    Mat matrix =
        sorted.eigenvectors * sorted.eigenvalues.asDiagonal() * sorted.eigenvectors.adjoint();
    HermitianOperator out(std::move(matrix), std::move(dims));
    out.cache_->value = std::move(sorted);
    return out;
}

const EigenSystem& HermitianOperator::eig() const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    if (!cache_->value) {
        Eigen::SelfAdjointEigenSolver<Mat> solver(matrix_);
        if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
        cache_->value = EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
    }
    return *cache_->value;
}

DensityMatrix::DensityMatrix(Mat matrix, std::vector<int> dims)
    : DensityMatrix(HermitianOperator(std::move(matrix), std::move(dims))) {}

DensityMatrix::DensityMatrix(HermitianOperator op) : HermitianOperator(std::move(op)) {
    const double tr = trace();
    if (std::abs(tr - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "density matrix trace is " << tr << ", expected 1";
        throw Error(msg.str());
    }
    const double min_eig = eig().eigenvalues.minCoeff();
    if (min_eig < -1e-10) {
        std::ostringstream msg;
        msg << "density matrix has negative eigenvalue " << min_eig;
        throw Error(msg.str());
    }
}

Mat pauli_matrix(Axis axis) {
    Mat m(2, 2);
    switch (axis) {
        case Axis::X: m << 0, 1, 1, 0; break;
        case Axis::Y: m << 0, Cplx(0, -1), Cplx(0, 1), 0; break;
        case Axis::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

Mat sigma_plus() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 1;
    return m;
}

Mat sigma_minus() {
    Mat m = Mat::Zero(2, 2);
    m(1, 0) = 1;
    return m;
}

HermitianOperator build_pauli_operator(const std::vector<PauliTerm>& terms, int num_sites) {
    if (num_sites <= 0) throw Error("num_sites must be positive");
    const long dim = 1L << num_sites;
    Mat sum = Mat::Zero(dim, dim);
    for (const auto& term : terms) {
        std::set<int> seen;
        Mat part = Mat::Identity(dim, dim);
        for (const auto& [site, axis] : term.factors) {
            if (site < 0 || site >= num_sites) {
                std::ostringstream msg;
                msg << "Pauli term site " << site << " out of range for " << num_sites << " sites";
                throw Error(msg.str());
            }
            if (!seen.insert(site).second) {
                std::ostringstream msg;
                msg << "duplicate site " << site << " within one Pauli term";
                throw Error(msg.str());
            }
            std::vector<int> dims(num_sites, 2);
            part = (part * embed_local(pauli_matrix(axis), site, dims)).eval();
        }
        sum += term.coefficient * part;
    }
    return HermitianOperator(sum, std::vector<int>(num_sites, 2));
}

Mat embed_local(const Mat& op, int site, const std::vector<int>& dims) {
    if (site < 0 || site >= static_cast<int>(dims.size()))
        throw Error("embed_local: site index out of range");
    if (op.rows() != dims[site] || op.cols() != dims[site])
        throw Error("embed_local: operator dimension does not match dims[site]");
    Mat out = Mat::Identity(1, 1);
    for (size_t k = 0; k < dims.size(); ++k) {
        if (static_cast<int>(k) == site)
            out = kron(out, op).eval();
        else
            out = kron(out, Mat::Identity(dims[k], dims[k])).eval();
    }
    return out;
}

HermitianOperator embed_local(const HermitianOperator& op, int site, const std::vector<int>& dims) {
    return HermitianOperator(embed_local(op.matrix(), site, dims), dims);
}

Mat embed_on_factors(const Mat& op, const std::vector<int>& sites, const std::vector<int>& dims) {
    const int n = static_cast<int>(dims.size());
    std::vector<int> sub_dims;
    for (int s : sites) {
        if (s < 0 || s >= n) throw Error("embed_on_factors: site index out of range");
        sub_dims.push_back(dims[s]);
    }
    if (op.rows() != checked_total_dim(sub_dims))
        throw Error("embed_on_factors: operator dimension does not match the selected factors");
    std::vector<bool> used(n, false);
    for (int s : sites) {
        if (used[s]) throw Error("embed_on_factors: repeated site");
        used[s] = true;
    }
    const long total = checked_total_dim(dims);
    Mat out = Mat::Zero(total, total);
    std::vector<int> row(n), col(n), sub_row(sites.size()), sub_col(sites.size());
    for (long i = 0; i < total; ++i) {
        index_to_digits(i, dims, row);
        for (size_t k = 0; k < sites.size(); ++k) sub_row[k] = row[sites[k]];
        const long si = digits_to_index(sub_row, sub_dims);
        for (long j = 0; j < total; ++j) {
            index_to_digits(j, dims, col);
            bool identity_ok = true;
            for (int q = 0; q < n; ++q) {
                if (!used[q] && row[q] != col[q]) {
                    identity_ok = false;
                    break;
                }
            }
            if (!identity_ok) continue;
            for (size_t k = 0; k < sites.size(); ++k) sub_col[k] = col[sites[k]];
            out(i, j) = op(si, digits_to_index(sub_col, sub_dims));
        }
    }
    return out;
}

EigenSystem eig_hermitian(const HermitianOperator& a) { return a.eig(); }

HermitianOperator matrix_function(const HermitianOperator& a,
                                  const std::function<double(double)>& f,
                                  const std::optional<FunctionDomain>& domain) {
    const EigenSystem& es = a.eig();
    RVec w = es.eigenvalues;
    if (domain) {
        for (int i = 0; i < w.size(); ++i) {
            if (w[i] < 0.0 && w[i] > -1e-10) w[i] = 0.0;
            const bool below = domain->exclusive_min ? (w[i] <= domain->min) : (w[i] < domain->min);
            if (below) {
                std::ostringstream msg;
                msg << "eigenvalue " << w[i] << " outside the function domain";
                if (domain->exclusive_min)
                    throw SingularStateError(msg.str(), w[i]);
                throw DomainError(msg.str(), w[i]);
            }
        }
    }
    RVec fw(w.size());
    for (int i = 0; i < w.size(); ++i) fw[i] = f(w[i]);
    return HermitianOperator::from_eigensystem({fw, es.eigenvectors}, a.dims());
}

Mat unitary_from_hamiltonian(const HermitianOperator& h, double t) {
    const EigenSystem& es = h.eig();
    Eigen::VectorXcd phases(es.eigenvalues.size());
    for (int i = 0; i < es.eigenvalues.size(); ++i)
        phases[i] = std::exp(Cplx(0, -es.eigenvalues[i] * t));
    return es.eigenvectors * phases.asDiagonal() * es.eigenvectors.adjoint();
}

Mat partial_trace(const Mat& m, const std::vector<int>& keep, const std::vector<int>& dims) {
    const int n = static_cast<int>(dims.size());
    if (keep.empty()) throw Error("partial_trace: keep set must be nonempty");
    std::vector<bool> kept(n, false);
    for (int k : keep) {
        if (k < 0 || k >= n) throw Error("partial_trace: keep index out of range");
        if (kept[k]) throw Error("partial_trace: repeated keep index");
        kept[k] = true;
    }
    std::vector<int> keep_sorted;
    std::vector<int> traced;
    for (int q = 0; q < n; ++q) (kept[q] ? keep_sorted : traced).push_back(q);

    std::vector<int> keep_dims, traced_dims;
    for (int q : keep_sorted) keep_dims.push_back(dims[q]);
    for (int q : traced) traced_dims.push_back(dims[q]);
    const long dk = checked_total_dim(keep_dims);
    const long dt = checked_total_dim(traced_dims);
    if (m.rows() != dk * dt) throw Error("partial_trace: matrix does not match dims");

    Mat out = Mat::Zero(dk, dk);
    std::vector<int> full(n), krow(keep_dims.size()), kcol(keep_dims.size()), tdig(traced_dims.size());
    for (long r = 0; r < dk; ++r) {
        index_to_digits(r, keep_dims, krow);
        for (long c = 0; c < dk; ++c) {
            index_to_digits(c, keep_dims, kcol);
            Cplx acc = 0;
            for (long s = 0; s < dt; ++s) {
                index_to_digits(s, traced_dims, tdig);
                for (size_t k = 0; k < keep_sorted.size(); ++k) full[keep_sorted[k]] = krow[k];
                for (size_t k = 0; k < traced.size(); ++k) full[traced[k]] = tdig[k];
                const long i = digits_to_index(full, dims);
                for (size_t k = 0; k < keep_sorted.size(); ++k) full[keep_sorted[k]] = kcol[k];
                const long j = digits_to_index(full, dims);
                acc += m(i, j);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

HermitianOperator partial_trace(const HermitianOperator& m, const std::vector<int>& keep) {
    std::vector<int> keep_sorted = keep;
    std::sort(keep_sorted.begin(), keep_sorted.end());
    std::vector<int> keep_dims;
    for (int q : keep_sorted) {
        if (q < 0 || q >= static_cast<int>(m.dims().size()))
            throw Error("partial_trace: keep index out of range");
        keep_dims.push_back(m.dims()[q]);
    }
    return HermitianOperator(partial_trace(m.matrix(), keep_sorted, m.dims()), keep_dims);
}

double operator_norm(const HermitianOperator& a) {
    if (a.dim() == 0) return 0.0;
    return a.eig().eigenvalues.cwiseAbs().maxCoeff();
}

double expectation(const Mat& rho, const Mat& a) { return (rho * a).trace().real(); }

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

bool is_unitary(const Mat& u, double tol) {
    if (u.rows() != u.cols()) return false;
    const Mat id = Mat::Identity(u.rows(), u.cols());
    return (u * u.adjoint() - id).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace gpassivity
