#pragma once

// Independent reference computations for tests. Nothing here calls the
// library code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sonfis/nfis.hpp"

namespace oracle {

/// Direct transcription of the weighted-average TSK output:
///   y = (1 / sum_r prod_j mu_r(x_j)) * sum_k prod_j mu_k(x_j) (p_k0 + sum_j p_kj x_j)
/// with every firing strength floored at `floor`. Real selects the working
/// precision.
template <typename Real = double>
Real tsk_output(const sonfis::RuleBase& rb, const std::vector<double>& x, double floor = 1e-9) {
  Real denominator = 0.0;
  Real numerator = 0.0;
  for (const auto& rule : rb.rules) {
    Real w = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& mf = rule.antecedent[j];
      const Real u = (Real(x[j]) - mf.c) / mf.sigma;
      w *= 1 / (1 + std::pow(u * u, Real(mf.b)));
    }
    if (w < floor) w = floor;
    Real f = rule.consequent[0];
    for (std::size_t j = 0; j < x.size(); ++j) f += Real(rule.consequent[j + 1]) * x[j];
    denominator += w;
    numerator += w * f;
  }
  return numerator / denominator;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Ordinary least squares on the raw (1, x) design via normal equations.
inline std::vector<double> linear_least_squares(const std::vector<std::vector<double>>& xs,
                                                const std::vector<double>& t) {
  const std::size_t p = xs.front().size() + 1;
  std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
  std::vector<double> atb(p, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> row{1.0};
    row.insert(row.end(), xs[i].begin(), xs[i].end());
    for (std::size_t a = 0; a < p; ++a) {
      atb[a] += row[a] * t[i];
      for (std::size_t b = 0; b < p; ++b) ata[a][b] += row[a] * row[b];
    }
  }
  return solve_dense(ata, atb);
}

/// Central finite differences of f at theta with step h. f may evaluate in
/// extended precision to keep cancellation noise below the step's
/// truncation error.
inline std::vector<double> central_difference(const std::function<long double(const std::vector<double>&)>& f,
                                              std::vector<double> theta, double h) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double up_step = theta[i] - orig;
    const long double up = f(theta);
    theta[i] = orig - h;
    const double down_step = orig - theta[i];
    const long double down = f(theta);
    theta[i] = orig;
    g[i] = static_cast<double>((up - down) / (static_cast<long double>(up_step) + down_step));
  }
  return g;
}

/// Random rule base with centres in [0,1], widths in [0.3,1.2], shapes in
/// [0.6,2.5] and consequents in [-1,1].
inline sonfis::RuleBase random_rulebase(std::mt19937_64& gen, std::size_t n_rules, std::size_t n_inputs) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), width(0.3, 1.2), shape(0.6, 2.5), weight(-1.0, 1.0);
  sonfis::RuleBase rb;
  rb.n_inputs = n_inputs;
  rb.rules.resize(n_rules);
  for (auto& rule : rb.rules) {
    for (std::size_t j = 0; j < n_inputs; ++j) rule.antecedent.push_back({unit(gen), width(gen), shape(gen)});
    for (std::size_t j = 0; j <= n_inputs; ++j) rule.consequent.push_back(weight(gen));
  }
  return rb;
}

inline std::vector<double> random_point(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = unit(gen);
  return x;
}

/// Relative error with a floor on the denominator for near-zero components.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Quartile sizes of the reduced-efficiency curve from its closed form
/// (d/d50)^m = ln(1/(1-q)) / ln 2, giving the imperfection directly.
inline double imperfection_closed_form(double m) {
  const double x25 = std::pow(std::log(4.0 / 3.0) / std::log(2.0), 1.0 / m);
  const double x75 = std::pow(2.0, 1.0 / m);
  return (x75 - x25) / 2.0;
}

/// Simpson integration of f over [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
