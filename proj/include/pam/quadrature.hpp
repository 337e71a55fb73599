#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace pam {

// Gauss-Kronrod 7-15 node pair on [-1, 1].
extern const double kGk15Nodes[8];    // nonnegative abscissae, node 7 is 0
extern const double kGk15Weights[8];  // Kronrod weights
extern const double kG7Weights[4];    // embedded Gauss weights for nodes 1,3,5,7

struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& msg, double achieved_tol)
      : std::runtime_error(msg + " (achieved tolerance " + std::to_string(achieved_tol) + ")"),
        achieved(achieved_tol) {}
  double achieved;
};

struct QuadCell {
  double a, b;
  double value;
  double error;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  std::vector<QuadCell> cells;  // filled only when requested; sorted by a
};

template <class F>
QuadCell gk15_cell(F&& f, double a, double b, long& evals) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double kron = kGk15Weights[7] * f(c);
  double gauss = kG7Weights[3] * f(c);
  evals += 1;
  for (int i = 0; i < 7; ++i) {
    double x = hw * kGk15Nodes[i];
    double fv = f(c - x) + f(c + x);
    evals += 2;
    kron += kGk15Weights[i] * fv;
    if (i % 2 == 1) gauss += kG7Weights[i / 2] * fv;
  }
  QuadCell cell;
  cell.a = a;
  cell.b = b;
  cell.value = kron * hw;
  cell.error = std::abs((kron - gauss) * hw);
  return cell;
}

// Globally adaptive Gauss-Kronrod integration of f over [a, b]. Terminates when
// the summed error estimate is <= max(abs_tol, rel_tol * |integral|); throws
// QuadratureError (carrying the achieved tolerance) if max_cells splits do not
// get there.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                              double rel_tol = 0.0, int max_cells = 4000,
                              bool keep_cells = false) {
  QuadResult res;
  if (a == b) return res;
  auto worse = [](const QuadCell& x, const QuadCell& y) { return x.error < y.error; };
  std::priority_queue<QuadCell, std::vector<QuadCell>, decltype(worse)> heap(worse);
  heap.push(gk15_cell(f, a, b, res.evaluations));
  double total = heap.top().value, err = heap.top().error;
  int cells = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && cells < max_cells) {
    QuadCell worst = heap.top();
    heap.pop();
    double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval at rounding resolution
      heap.push(worst);
      break;
    }
    QuadCell left = gk15_cell(f, worst.a, mid, res.evaluations);
    QuadCell right = gk15_cell(f, mid, worst.b, res.evaluations);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++cells;
  }
  if (err > std::max(abs_tol, rel_tol * std::abs(total)))
    throw QuadratureError("adaptive quadrature did not converge", err);
  res.value = total;
  res.error = err;
  if (keep_cells) {
    res.cells.reserve(cells);
    while (!heap.empty()) {
      res.cells.push_back(heap.top());
      heap.pop();
    }
    std::sort(res.cells.begin(), res.cells.end(),
              [](const QuadCell& x, const QuadCell& y) { return x.a < y.a; });
  }
  return res;
}

}  // namespace pam
