#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace chainalloc {

/// min c'x subject to rows (<=, >=, =) and x >= 0.
struct LinearProgram {
    enum class Sense { LessEqual, GreaterEqual, Equal };
    struct Row {
        std::vector<std::pair<std::size_t, double>> coeffs;
        Sense sense = Sense::LessEqual;
        double rhs = 0.0;
    };

    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<Row> rows;

    std::size_t add_var(double cost = 0.0) {
        objective.push_back(cost);
        return num_vars++;
    }
    void add_row(std::vector<std::pair<std::size_t, double>> coeffs, Sense sense, double rhs) {
        rows.push_back({std::move(coeffs), sense, rhs});
    }
};

struct LPResult {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Optimal;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's smallest-index rule, so
/// degenerate pivots cannot cycle.
inline LPResult solve_simplex(const LinearProgram& lp, double eps = 1e-9) {
    const std::size_t n = lp.num_vars;
    const std::size_t m = lp.rows.size();

    // Columns: structural | slack/surplus (one per inequality) | artificial.
    std::size_t n_slack = 0;
    for (const auto& r : lp.rows) n_slack += r.sense == LinearProgram::Sense::Equal ? 0 : 1;
    std::vector<int> flip(m, 1);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& r = lp.rows[i];
        if (r.rhs < 0) flip[i] = -1;
        const bool le = r.sense == LinearProgram::Sense::LessEqual;
        const bool ge = r.sense == LinearProgram::Sense::GreaterEqual;
        // After flipping, a <= row with rhs >= 0 starts feasible on its slack.
        const bool slack_basic = (le && flip[i] == 1) || (ge && flip[i] == -1);
        if (!slack_basic) ++n_art;
    }
    const std::size_t cols = n + n_slack + n_art;
    const std::size_t rhs = cols;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols + 1, 0.0));
    std::vector<std::size_t> basis(m);

    std::size_t s = n, a = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& r = lp.rows[i];
        const double f = flip[i];
        for (const auto& [j, v] : r.coeffs) T[i][j] += f * v;
        T[i][rhs] = f * r.rhs;
        const bool le = r.sense == LinearProgram::Sense::LessEqual;
        const bool ge = r.sense == LinearProgram::Sense::GreaterEqual;
        if (le || ge) {
            T[i][s] = f * (le ? 1.0 : -1.0);
            if (T[i][s] > 0) {
                basis[i] = s;
                ++s;
                continue;
            }
            ++s;
        }
        T[i][a] = 1.0;
        basis[i] = a++;
    }

    LPResult res;
    auto pivot = [&](std::size_t row, std::size_t col) {
        const double pv = T[row][col];
        for (auto& v : T[row]) v /= pv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == row) continue;
            const double f = T[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= cols; ++j) T[i][j] -= f * T[row][j];
        }
        basis[row] = col;
        ++res.pivots;
    };

    // Objective row holds reduced costs; entering column has a negative one.
    auto run = [&](std::size_t allowed_cols) -> bool {
        while (true) {
            std::size_t enter = allowed_cols;
            for (std::size_t j = 0; j < allowed_cols; ++j) {
                if (T[m][j] < -eps) {
                    enter = j;
                    break;
                }
            }
            if (enter == allowed_cols) return true;
            std::size_t leave = m;
            double best = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][enter] <= eps) continue;
                const double ratio = T[i][rhs] / T[i][enter];
                if (leave == m || ratio < best - eps || (ratio <= best + eps && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m) return false;
            pivot(leave, enter);
        }
    };

    // Phase 1: minimise the sum of artificials.
    if (n_art > 0) {
        std::fill(T[m].begin(), T[m].end(), 0.0);
        for (std::size_t j = n + n_slack; j < cols; ++j) T[m][j] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] >= n + n_slack) {
                for (std::size_t j = 0; j <= cols; ++j) T[m][j] -= T[i][j];
            }
        }
        run(cols);
        if (-T[m][rhs] > 1e-7) {
            res.status = LPResult::Status::Infeasible;
            return res;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] < n + n_slack) continue;
            for (std::size_t j = 0; j < n + n_slack; ++j) {
                if (std::abs(T[i][j]) > eps) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    // Phase 2 on the original costs, artificials barred from entering.
    std::fill(T[m].begin(), T[m].end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) T[m][j] = lp.objective[j];
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = basis[i] < n ? lp.objective[basis[i]] : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= cols; ++j) T[m][j] -= cb * T[i][j];
    }
    if (!run(n + n_slack)) {
        res.status = LPResult::Status::Unbounded;
        return res;
    }

    res.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) res.x[basis[i]] = T[i][rhs];
    }
    res.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) res.objective += lp.objective[j] * res.x[j];
    return res;
}

}  // namespace chainalloc
