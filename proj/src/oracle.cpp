#include "lpdm/oracle.hpp"

#include "lpdm/equation.hpp"
#include "lpdm/errors.hpp"
#include "lpdm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace lpdm {

namespace {

constexpr double kPi = std::numbers::pi;
// Residual a stalled collocation Newton must reach to count as converged.
constexpr double kStallAccept = 1e-10;
constexpr double kMinStep = 0x1p-30;
// Below this sin(theta) the pole closure replaces cot(theta) h'.
constexpr double kPoleSin = 1e-8;

Eigen::VectorXd make_nodes(OracleMode mode, int size) {
  if (mode == OracleMode::kS1) {
    Eigen::VectorXd t(size);
    for (int j = 0; j < size; ++j) t[j] = 2.0 * kPi * j / size;
    return t;
  }
  Eigen::VectorXd t(size + 1);
  for (int j = 0; j <= size; ++j) t[j] = kPi * j / size;
  return t;
}

// Derivative of order r of cos(k t) and sin(k t).
double dcos(int k, double t, int r) {
  const double kk = std::pow(static_cast<double>(k), r);
  switch (r % 4) {
    case 0: return kk * std::cos(k * t);
    case 1: return -kk * std::sin(k * t);
    case 2: return -kk * std::cos(k * t);
    default: return kk * std::sin(k * t);
  }
}

double dsin(int k, double t, int r) {
  const double kk = std::pow(static_cast<double>(k), r);
  switch (r % 4) {
    case 0: return kk * std::sin(k * t);
    case 1: return kk * std::cos(k * t);
    case 2: return -kk * std::sin(k * t);
    default: return -kk * std::cos(k * t);
  }
}

// Differentiation matrices at the collocation points, built by mapping
// values to spectral coefficients and differentiating the basis.
struct Spectral {
  Eigen::MatrixXd d1;
  Eigen::MatrixXd d2;
};

Spectral spectral_matrices(OracleMode mode, const Eigen::VectorXd& nodes) {
  const auto m = nodes.size();
  Spectral out{Eigen::MatrixXd(m, m), Eigen::MatrixXd(m, m)};
  for (Eigen::Index col = 0; col < m; ++col) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(m);
    unit[col] = 1.0;
    const Profile basis(mode, nodes, unit);
    for (Eigen::Index row = 0; row < m; ++row) {
      out.d1(row, col) = basis.d1(nodes[row]);
      out.d2(row, col) = basis.d2(nodes[row]);
    }
  }
  return out;
}

struct Evaluation {
  bool admissible = false;
  Eigen::VectorXd g;
  double sup = std::numeric_limits<double>::infinity();
  double min_b = 0.0;
};

struct Collocation {
  OracleMode mode;
  const ODEProblem& prob;
  Eigen::VectorXd nodes;
  Spectral d;
  Eigen::VectorXd logf;

  int n() const { return mode == OracleMode::kS1 ? 2 : 3; }

  // Second principal entry of b for the axisymmetric reduction; the
  // closure at the poles uses h'' + h.
  bool at_pole(Eigen::Index j) const {
    return mode == OracleMode::kAxisymS2 && std::abs(std::sin(nodes[j])) < kPoleSin;
  }

  Evaluation evaluate(const Eigen::VectorXd& h) const {
    Evaluation e;
    if (!h.allFinite() || h.minCoeff() <= 0.0) return e;
    const Eigen::VectorXd h1 = d.d1 * h;
    const Eigen::VectorXd h2 = d.d2 * h;
    e.g.resize(h.size());
    e.min_b = std::numeric_limits<double>::infinity();
    const double nq = n() - prob.q;
    for (Eigen::Index j = 0; j < h.size(); ++j) {
      const double b1 = h2[j] + h[j];
      double logdet = 0.0;
      e.min_b = std::min(e.min_b, b1);
      if (mode == OracleMode::kS1) {
        if (!(b1 > 0.0)) return e;
        logdet = std::log(b1);
      } else {
        const double b2 = at_pole(j) ? b1 : h1[j] * std::cos(nodes[j]) / std::sin(nodes[j]) + h[j];
        e.min_b = std::min(e.min_b, b2);
        if (!(b1 > 0.0 && b2 > 0.0)) return e;
        logdet = std::log(b1) + std::log(b2);
      }
      e.g[j] = logdet - (prob.p - 1.0) * std::log(h[j]) -
               0.5 * nq * std::log(h1[j] * h1[j] + h[j] * h[j]) - logf[j];
    }
    e.sup = e.g.cwiseAbs().maxCoeff();
    e.admissible = true;
    return e;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& h) const {
    const auto m = h.size();
    const Eigen::VectorXd h1 = d.d1 * h;
    const Eigen::VectorXd h2 = d.d2 * h;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd lb1 = d.d2 + identity;
    Eigen::MatrixXd J(m, m);
    const double nq = n() - prob.q;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double b1 = h2[j] + h[j];
      const double rho2 = h1[j] * h1[j] + h[j] * h[j];
      J.row(j) = lb1.row(j) / b1;
      if (mode == OracleMode::kAxisymS2) {
        if (at_pole(j)) {
          J.row(j) += lb1.row(j) / b1;
        } else {
          const double cot = std::cos(nodes[j]) / std::sin(nodes[j]);
          const double b2 = cot * h1[j] + h[j];
          J.row(j) += (cot * d.d1.row(j) + identity.row(j)) / b2;
        }
      }
      J(j, j) -= (prob.p - 1.0) / h[j];
      J.row(j) -= nq * (h1[j] * d.d1.row(j) + h[j] * identity.row(j)) / rho2;
    }
    return J;
  }
};

Profile solve_collocation(const ODEProblem& prob, OracleMode mode) {
  if (!prob.f) throw PreconditionError("oracle problem has no density");
  if (!std::isfinite(prob.p) || !std::isfinite(prob.q)) {
    throw PreconditionError("exponents p and q must be finite");
  }
  if (prob.p == prob.q) throw PreconditionError("p = q: the constant initial guess is undefined");
  if (mode == OracleMode::kS1 && (prob.size < 8 || prob.size % 2 != 0)) {
    throw PreconditionError("S^1 oracle needs an even number (>= 8) of collocation points");
  }
  if (mode == OracleMode::kAxisymS2 && prob.size < 4) {
    throw PreconditionError("axisymmetric oracle needs N >= 4");
  }

  Collocation c{mode, prob, make_nodes(mode, prob.size), {}, {}};
  c.d = spectral_matrices(mode, c.nodes);
  c.logf.resize(c.nodes.size());
  double max_f = 0.0;
  for (Eigen::Index j = 0; j < c.nodes.size(); ++j) {
    const double fj = prob.f(c.nodes[j]);
    if (fj < 0.0) throw PreconditionError("density must be nonnegative");
    if (!(fj > 0.0)) throw PreconditionError("oracle needs a strictly positive density");
    c.logf[j] = std::log(fj);
    max_f = std::max(max_f, fj);
  }

  Eigen::VectorXd h =
      Eigen::VectorXd::Constant(c.nodes.size(), std::pow(max_f, 1.0 / (prob.q - prob.p)));
  Evaluation e = c.evaluate(h);
  int it = 0;
  for (; e.sup > prob.tol; ++it) {
    if (it >= prob.max_iters) {
      throw NonConvergence("oracle: no convergence in " + std::to_string(prob.max_iters) +
                               " iterations",
                           it, e.sup);
    }
    const Eigen::VectorXd delta = c.jacobian(h).partialPivLu().solve(-e.g);
    bool accepted = false;
    for (double step = 1.0; step >= kMinStep; step *= 0.5) {
      Evaluation trial = c.evaluate(h + step * delta);
      if (trial.admissible && trial.sup < e.sup) {
        h += step * delta;
        e = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (e.sup <= kStallAccept) break;
      throw NonConvergence("oracle: line search stalled", it, e.sup);
    }
  }
  Profile out(mode, c.nodes, h);
  out.residual = e.sup;
  out.iterations = it;
  out.min_b = e.min_b;
  return out;
}

}  // namespace

Profile::Profile(OracleMode mode, Eigen::VectorXd nodes, Eigen::VectorXd values)
    : mode_(mode), nodes_(std::move(nodes)), values_(std::move(values)) {
  const auto m = nodes_.size();
  if (values_.size() != m) throw PreconditionError("profile nodes and values differ in size");
  if (mode_ == OracleMode::kS1) {
    const auto half = m / 2;
    cos_coeffs_ = Eigen::VectorXd::Zero(half + 1);
    sin_coeffs_ = Eigen::VectorXd::Zero(half + 1);
    for (Eigen::Index k = 0; k <= half; ++k) {
      double a = 0.0;
      double b = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        a += values_[j] * std::cos(k * nodes_[j]);
        b += values_[j] * std::sin(k * nodes_[j]);
      }
      const double scale = (k == 0 || k == half) ? 1.0 / m : 2.0 / m;
      cos_coeffs_[k] = scale * a;
      sin_coeffs_[k] = (k == 0 || k == half) ? 0.0 : scale * b;
    }
  } else {
    // DCT-I: trapezoid weights on theta_j = pi j / N.
    const auto N = m - 1;
    cos_coeffs_ = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k <= N; ++k) {
      double a = 0.0;
      for (Eigen::Index j = 0; j <= N; ++j) {
        const double w = (j == 0 || j == N) ? 0.5 : 1.0;
        a += w * values_[j] * std::cos(k * nodes_[j]);
      }
      const double scale = (k == 0 || k == N) ? 1.0 / N : 2.0 / N;
      cos_coeffs_[k] = scale * a;
    }
  }
}

double Profile::eval(double theta, int order) const {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < cos_coeffs_.size(); ++k) {
    sum += cos_coeffs_[k] * dcos(static_cast<int>(k), theta, order);
  }
  for (Eigen::Index k = 0; k < sin_coeffs_.size(); ++k) {
    sum += sin_coeffs_[k] * dsin(static_cast<int>(k), theta, order);
  }
  return sum;
}

double Profile::value(double theta) const { return eval(theta, 0); }
double Profile::d1(double theta) const { return eval(theta, 1); }
double Profile::d2(double theta) const { return eval(theta, 2); }

double Profile::H(double theta) const {
  const double b1 = d2(theta) + value(theta);
  if (mode_ == OracleMode::kS1) return b1;
  const double s = std::sin(theta);
  const double b2 = std::abs(s) < kPoleSin ? b1 : d1(theta) * std::cos(theta) / s + value(theta);
  return b1 + b2;
}

double Profile::angle_of(const Eigen::Vector3d& x) const {
  if (mode_ == OracleMode::kS1) {
    const double t = std::atan2(x[1], x[0]);
    return t < 0.0 ? t + 2.0 * kPi : t;
  }
  return std::acos(std::clamp(x[2], -1.0, 1.0));
}

Profile solve_s1(const ODEProblem& prob) { return solve_collocation(prob, OracleMode::kS1); }

Profile solve_axisym_s2(const ODEProblem& prob) {
  return solve_collocation(prob, OracleMode::kAxisymS2);
}

Profile solve_oracle(const ODEProblem& prob) { return solve_collocation(prob, prob.mode); }

FdCheckResult fd_check(const SupportFn& h, const ProblemParams& params, const ScalarField& delta,
                       const std::vector<double>& steps, FdScheme scheme) {
  if (&delta.grid() != &h.grid()) throw PreconditionError("delta lives on a different grid");
  if (steps.empty()) throw PreconditionError("fd_check needs at least one step");
  const ScalarField one = ScalarField::constant(h.field().grid_ptr(), 1.0);
  const Eigen::VectorXd g0 = log_residual(h, one, params).values.values();
  const Eigen::VectorXd ld = Linearization(h, params).apply(delta).values();
  const double scale = ld.cwiseAbs().maxCoeff();

  auto g_at = [&](double s) -> std::optional<Eigen::VectorXd> {
    try {
      const SupportFn shifted(ScalarField(h.field().grid_ptr(), h.field().values() + s * delta.values()));
      return log_residual(shifted, one, params).values.values();
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  FdCheckResult out;
  out.steps = steps;
  out.min_error = std::numeric_limits<double>::infinity();
  for (double s : steps) {
    double err = std::numeric_limits<double>::infinity();
    const auto plus = g_at(s);
    std::optional<Eigen::VectorXd> quotient;
    if (scheme == FdScheme::kForward) {
      if (plus) quotient = (*plus - g0) / s;
    } else {
      const auto minus = g_at(-s);
      if (plus && minus) quotient = (*plus - *minus) / (2.0 * s);
    }
    if (quotient) {
      const double diff = (*quotient - ld).cwiseAbs().maxCoeff();
      err = scale > 0.0 ? diff / scale : diff;
    }
    out.errors.push_back(err);
    if (err < out.min_error) {
      out.min_error = err;
      out.floor_step = s;
    }
  }
  return out;
}

}  // namespace lpdm
