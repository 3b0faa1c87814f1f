#include "finitekey/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace finitekey::lp {

namespace {

using Real = long double;
constexpr Real kEps = 1e-15L;

// Tableau layout follows the classic dictionary form: rows 0..m-1 hold the
// constraints, row m the objective, row m+1 the phase-one objective; column
// n is the artificial variable and column n+1 the right-hand side.
class Tableau {
public:
    explicit Tableau(const LinearProgram& lp)
        : m_(static_cast<int>(lp.b.size())),
          n_(static_cast<int>(lp.c.size())),
          nonbasic_(n_ + 1),
          basic_(m_),
          d_(m_ + 2, std::vector<Real>(n_ + 2, 0.0L)) {
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) d_[i][j] = lp.A[i][j];
            basic_[i] = n_ + i;
            d_[i][n_] = -1.0L;
            d_[i][n_ + 1] = lp.b[i];
        }
        for (int j = 0; j < n_; ++j) {
            nonbasic_[j] = j;
            d_[m_][j] = -static_cast<Real>(lp.c[j]);
        }
        nonbasic_[n_] = -1;
        d_[m_ + 1][n_] = 1.0L;
    }

    Solution run() {
        Solution solution;
        int r = 0;
        for (int i = 1; i < m_; ++i) {
            if (d_[i][n_ + 1] < d_[r][n_ + 1]) r = i;
        }
        if (m_ > 0 && d_[r][n_ + 1] < -kEps) {
            pivot(r, n_);
            if (!simplex(2) || d_[m_ + 1][n_ + 1] < -kEps * scale()) {
                solution.status = Status::infeasible;
                return solution;
            }
            for (int i = 0; i < m_; ++i) {
                if (basic_[i] == -1) {
                    int s = -1;
                    for (int j = 0; j <= n_; ++j) {
                        if (nonbasic_[j] == -1) continue;
                        if (s == -1 || std::fabs(d_[i][j]) > std::fabs(d_[i][s])) s = j;
                    }
                    if (s != -1 && std::fabs(d_[i][s]) > kEps) pivot(i, s);
                }
            }
        }
        const bool bounded = simplex(1);
        solution.x.assign(n_, 0.0);
        for (int i = 0; i < m_; ++i) {
            if (basic_[i] >= 0 && basic_[i] < n_) {
                solution.x[basic_[i]] = static_cast<double>(d_[i][n_ + 1]);
            }
        }
        solution.status = bounded ? Status::optimal : Status::unbounded;
        solution.objective = static_cast<double>(d_[m_][n_ + 1]);
        return solution;
    }

private:
    Real scale() const {
        Real s = 1.0L;
        for (int i = 0; i < m_; ++i) s = std::max(s, std::fabs(d_[i][n_ + 1]));
        return s;
    }

    void pivot(int r, int s) {
        const Real inv = 1.0L / d_[r][s];
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r || d_[i][s] == 0.0L) continue;
            const Real factor = d_[i][s] * inv;
            for (int j = 0; j < n_ + 2; ++j) d_[i][j] -= d_[r][j] * factor;
            d_[i][s] = d_[r][s] * factor;
        }
        for (int j = 0; j < n_ + 2; ++j) {
            if (j != s) d_[r][j] *= inv;
        }
        for (int i = 0; i < m_ + 2; ++i) {
            if (i != r) d_[i][s] *= -inv;
        }
        d_[r][s] = inv;
        std::swap(basic_[r], nonbasic_[s]);
    }

    // Bland's rule: lowest-index improving column, lowest-index leaving row
    // among ratio ties. Returns false when the objective is unbounded.
    bool simplex(int phase) {
        const int objective_row = phase == 1 ? m_ : m_ + 1;
        for (int iteration = 0; iteration < 100000; ++iteration) {
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (nonbasic_[j] == -phase) continue;
                if (d_[objective_row][j] < -kEps &&
                    (s == -1 || nonbasic_[j] < nonbasic_[s])) {
                    s = j;
                }
            }
            if (s == -1) return true;
            int r = -1;
            Real best = 0.0L;
            for (int i = 0; i < m_; ++i) {
                if (d_[i][s] <= kEps) continue;
                const Real ratio = d_[i][n_ + 1] / d_[i][s];
                if (r == -1 || ratio < best || (ratio == best && basic_[i] < basic_[r])) {
                    r = i;
                    best = ratio;
                }
            }
            if (r == -1) return false;
            pivot(r, s);
        }
        throw std::runtime_error("lp::solve: iteration limit reached");
    }

    int m_;
    int n_;
    std::vector<int> nonbasic_;
    std::vector<int> basic_;
    std::vector<std::vector<Real>> d_;
};

}  // namespace

Solution solve(const LinearProgram& program) {
    if (program.A.size() != program.b.size()) {
        throw std::invalid_argument("lp::solve: A and b row counts differ");
    }
    for (const auto& row : program.A) {
        if (row.size() != program.c.size()) {
            throw std::invalid_argument("lp::solve: ragged constraint matrix");
        }
    }
    return Tableau(program).run();
}

}  // namespace finitekey::lp
