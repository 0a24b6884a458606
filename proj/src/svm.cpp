#include "qek/svm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace qek {

namespace {

constexpr double kTau = 1e-12;

bool in_up(int y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0.0); }
bool in_low(int y, double a, double c) { return (y > 0 && a > 0.0) || (y < 0 && a < c); }

}  // namespace

BinarySvmModel solve_dual(const Matrix& kernel, std::span<const int> y, double c, const SmoOptions& options) {
  const std::size_t n = y.size();
  if (kernel.rows() != n || kernel.cols() != n)
    throw std::invalid_argument("solve_dual: kernel is " + std::to_string(kernel.rows()) + "x" +
                                std::to_string(kernel.cols()) + " for " + std::to_string(n) + " labels");
  if (!(c > 0.0)) throw std::invalid_argument("solve_dual: C must be positive");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw std::invalid_argument("solve_dual: labels must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("solve_dual: labels contain a single class");

  BinarySvmModel model;
  model.alphas.assign(n, 0.0);
  model.labels.assign(y.begin(), y.end());
  model.c = c;
  auto& a = model.alphas;

  // grad[i] = d/da_i of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
  std::vector<double> grad(n, -1.0);
  bool warned = false;
  const long max_iter = static_cast<long>(options.max_passes) * static_cast<long>(std::max<std::size_t>(n, 1));

  long iter = 0;
  for (; iter < max_iter; ++iter) {
    // Maximal violating pair: i maximises -y g over I_up, j minimises it over I_low.
    int i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(y[t], a[t], c) && v > gmax) {
        gmax = v;
        i = static_cast<int>(t);
      }
      if (in_low(y[t], a[t], c) && v < gmin) {
        gmin = v;
        j = static_cast<int>(t);
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < options.tolerance) {
      model.converged = true;
      break;
    }

    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    double eta = kernel(ui, ui) + kernel(uj, uj) - 2.0 * kernel(ui, uj);
    if (eta < -1e-8 && !warned) {
      std::cerr << "warning: solve_dual: kernel is not positive semidefinite (curvature " << eta
                << "); clamping\n";
      warned = true;
    }
    if (eta <= 0.0) eta = kTau;

    // Move along y_i d_i = -y_j d_j; step in terms of delta = y_i d_i.
    const double old_ai = a[ui];
    const double old_aj = a[uj];
    double delta = (gmax - gmin) / eta;

    // Feasible range for a_i + y_i delta and a_j - y_j delta.
    const auto clip = [&](double amount) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      // a_i' = a_i + y_i * amount in [0, C]
      if (y[ui] > 0) {
        hi = std::min(hi, c - old_ai);
        lo = std::max(lo, -old_ai);
      } else {
        hi = std::min(hi, old_ai);
        lo = std::max(lo, old_ai - c);
      }
      // a_j' = a_j - y_j * amount in [0, C]
      if (y[uj] > 0) {
        hi = std::min(hi, old_aj);
        lo = std::max(lo, old_aj - c);
      } else {
        hi = std::min(hi, c - old_aj);
        lo = std::max(lo, -old_aj);
      }
      return std::clamp(amount, lo, hi);
    };
    delta = clip(delta);

    a[ui] = std::clamp(old_ai + y[ui] * delta, 0.0, c);
    a[uj] = std::clamp(old_aj - y[uj] * delta, 0.0, c);
    const double di = a[ui] - old_ai;
    const double dj = a[uj] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[ui] * kernel(t, ui) * di + y[uj] * kernel(t, uj) * dj);
    }
  }
  model.iterations = static_cast<int>(iter);

  // Bias from free vectors, otherwise the midpoint of the feasible interval.
  double sum = 0.0;
  int free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] > 0.0 && a[t] < c) {
      sum += yg;
      ++free;
    } else if ((a[t] >= c && y[t] < 0) || (a[t] <= 0.0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = free > 0 ? sum / free : (ub + lb) / 2.0;
  model.bias = -rho;
  return model;
}

double dual_objective(const Matrix& kernel, std::span<const int> y, std::span<const double> alphas) {
  const std::size_t n = y.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alphas[i];
    for (std::size_t j = 0; j < n; ++j) quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel(i, j);
  }
  return lin - 0.5 * quad;
}

double decision_value(const BinarySvmModel& model, std::span<const double> kernel_row) {
  if (kernel_row.size() != model.alphas.size())
    throw std::invalid_argument("decision_value: kernel row has " + std::to_string(kernel_row.size()) +
                                " entries, model has " + std::to_string(model.alphas.size()) + " training points");
  double f = model.bias;
  for (std::size_t i = 0; i < kernel_row.size(); ++i) f += model.alphas[i] * model.labels[i] * kernel_row[i];
  return f;
}

OvrModel fit_ovr(const Matrix& train_kernel, std::span<const int> labels, double c, const SmoOptions& options) {
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw std::invalid_argument("fit_ovr: need at least two classes");
  OvrModel model;
  model.classes.assign(distinct.begin(), distinct.end());
  model.models.resize(model.classes.size());
  const auto k = static_cast<std::ptrdiff_t>(model.classes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < k; ++ci) {
    const int cls = model.classes[static_cast<std::size_t>(ci)];
    std::vector<int> y(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) y[t] = labels[t] == cls ? 1 : -1;
    model.models[static_cast<std::size_t>(ci)] = solve_dual(train_kernel, y, c, options);
  }
  return model;
}

std::vector<int> predict(const OvrModel& model, const Matrix& cross_kernel) {
  if (model.models.empty()) throw std::invalid_argument("predict: empty model");
  std::vector<int> out(cross_kernel.rows());
  for (std::size_t r = 0; r < cross_kernel.rows(); ++r) {
    double best = -std::numeric_limits<double>::infinity();
    int label = model.classes.front();
    for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
      const double f = decision_value(model.models[ci], cross_kernel.row(r));
      if (f > best) {
        best = f;
        label = model.classes[ci];
      }
    }
    out[r] = label;
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace qek
