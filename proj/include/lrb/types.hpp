#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lrb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Sorted, duplicate-free column indices.
using IndexSet = std::vector<Index>;

// Invalid argument or violated precondition.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical routine failed (non-convergence, loss of definiteness).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool is_subset(const IndexSet& a, const IndexSet& b)
{
    std::size_t j = 0;
    for (Index i : a) {
        while (j < b.size() && b[j] < i) ++j;
        if (j == b.size() || b[j] != i) return false;
    }
    return true;
}

inline Matrix select_columns(const Matrix& x, const IndexSet& cols)
{
    Matrix out(x.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
    return out;
}

inline Vector select_rows(const Vector& v, const IndexSet& rows)
{
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = v(rows[k]);
    return out;
}

} // namespace lrb
