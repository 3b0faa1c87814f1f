#pragma once

#include <vector>

namespace finitekey::lp {

/// maximize c.x  subject to  A x <= b,  x >= 0
struct LinearProgram {
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    std::vector<double> c;
};

enum class Status { optimal, infeasible, unbounded };

struct Solution {
    Status status = Status::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

/// Dense two-phase tableau simplex with Bland's pivoting rule. Intended for
/// the small (tens of rows) programs of decoy-state estimation; the tableau
/// is kept in extended precision.
Solution solve(const LinearProgram& program);

}  // namespace finitekey::lp
