#include "sp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sp/model.hpp"
#include "sp/simplex.hpp"

namespace sp {

namespace {

constexpr double kTiny = 1e-300;

double relative_decrease(double before, double after) {
  return (before - after) / std::max(std::abs(before), kTiny);
}

// Hinge and ridge terms for seen classifiers A_seen, with the hinge
// derivatives kept for gradient and curvature products.
struct SeenEvaluation {
  double hinge = 0.0;
  double ridge = 0.0;
  kernels::HingeTerms terms;

  double value() const { return hinge + ridge; }
};

SeenEvaluation evaluate_seen(const Matrix& A_seen, const Objective& obj) {
  const auto& train = *obj.train;
  SeenEvaluation ev;
  Matrix scores;
  kernels::row_scores(train.features, A_seen, scores);
  ev.terms = kernels::hinge_terms(scores, train.labels, obj.hinge);
  for (Eigen::Index c = 0; c < ev.terms.class_loss.size(); ++c) ev.hinge += ev.terms.class_loss(c);
  ev.ridge = 0.5 * obj.lambda * A_seen.squaredNorm();
  return ev;
}

// d objective / d A_seen.
Matrix seen_gradient(const Matrix& A_seen, const SeenEvaluation& ev, const Objective& obj) {
  Matrix grad;
  kernels::weighted_row_sums(ev.terms.slope, obj.train->features, grad);
  grad += obj.lambda * A_seen;
  return grad;
}

// Generalized Hessian of the hinge + ridge terms applied to a seen-classifier direction.
Matrix seen_curvature(const Matrix& direction, const SeenEvaluation& ev, const Objective& obj) {
  Matrix out = obj.lambda * direction;
  if (obj.hinge != Hinge::squared) return out;
  Matrix dz;
  kernels::row_scores(obj.train->features, direction, dz);
  const Matrix coef = 2.0 * ev.terms.active.cwiseProduct(dz);
  Matrix sum;
  kernels::weighted_row_sums(coef, obj.train->features, sum);
  out += sum;
  return out;
}

double sign_of_slot(const Objective& obj, std::size_t g) { return (obj.has_image_slot && g == 0) ? 1.0 : -1.0; }

// beta_0 W_image - sum_j beta_j W_j; without an image slot the image graph is
// taken to be zero, so the residual is -sum_j beta_j W_j.
Matrix alignment_residual(const Vector& beta, const Objective& obj) {
  Matrix residual = Matrix::Zero(obj.num_seen(), obj.num_unseen());
  for (std::size_t g = 0; g < obj.graphs.size(); ++g)
    residual += (sign_of_slot(obj, g) * beta(static_cast<Eigen::Index>(g))) * obj.graphs[g].weights;
  return residual;
}

double alignment_value(const Vector& beta, const Objective& obj) {
  return 0.5 * obj.gamma * alignment_residual(beta, obj).squaredNorm();
}

void check_shapes(const Matrix& V, const Vector& beta, const Objective& obj) {
  require(V.rows() == obj.num_unseen() && V.cols() == obj.dim(), "objective: V has the wrong shape");
  require(beta.size() == obj.num_weights(), "objective: beta length does not match graph count");
}

}  // namespace

void TrainingSet::validate() const {
  require(static_cast<Eigen::Index>(labels.size()) == features.rows(), "training set: label count mismatch");
  require(num_seen >= 1, "training set: no seen classes");
  for (auto l : labels) require(l >= 0 && l < num_seen, "training set: label outside the seen classes");
}

void Objective::validate() const {
  require(train != nullptr, "objective: missing training set");
  train->validate();
  require(!graphs.empty(), "objective: no graphs");
  require(lambda > 0.0 && std::isfinite(lambda), "objective: lambda must be positive");
  require(gamma >= 0.0 && std::isfinite(gamma), "objective: gamma must be nonnegative");
  for (const auto& g : graphs) {
    require(g.num_seen() == graphs.front().num_seen() && g.num_unseen() == graphs.front().num_unseen(),
            "objective: graph shape mismatch");
  }
  require(graphs.front().num_seen() == train->num_seen, "objective: graph rows do not match seen classes");
  for (std::size_t g = has_image_slot ? 1 : 0; g < graphs.size(); ++g)
    require(!graphs[g].zero_init, "objective: only the image slot may hold the zero graph");
}

void SolverSettings::validate() const {
  require(max_outer_iters >= 1 && v_max_steps >= 1 && beta_max_steps >= 1 && cg_max_iters >= 1,
          "solver settings: iteration limits must be positive");
  require(outer_tolerance > 0.0 && v_tolerance > 0.0 && beta_tolerance > 0.0 && cg_tolerance > 0.0,
          "solver settings: tolerances must be positive");
}

ObjectiveTerms objective_terms(const Matrix& V, const Vector& beta, const Objective& obj) {
  check_shapes(V, beta, obj);
  const Matrix A_seen = blend_weights(beta, obj.graphs) * V;
  const auto ev = evaluate_seen(A_seen, obj);
  return {ev.hinge, ev.ridge, alignment_value(beta, obj)};
}

double loss_value(const Matrix& V, const Vector& beta, const Objective& obj) {
  return objective_terms(V, beta, obj).total();
}

Matrix gradient_V(const Matrix& V, const Vector& beta, const Objective& obj) {
  check_shapes(V, beta, obj);
  const Matrix blended = blend_weights(beta, obj.graphs);
  const Matrix A_seen = blended * V;
  const auto ev = evaluate_seen(A_seen, obj);
  return blended.transpose() * seen_gradient(A_seen, ev, obj);
}

Vector gradient_beta(const Matrix& V, const Vector& beta, const Objective& obj) {
  check_shapes(V, beta, obj);
  const Matrix A_seen = blend_weights(beta, obj.graphs) * V;
  const auto ev = evaluate_seen(A_seen, obj);
  const Matrix grad_A = seen_gradient(A_seen, ev, obj);
  Vector grad(obj.num_weights());
  for (std::size_t g = 0; g < obj.graphs.size(); ++g)
    grad(static_cast<Eigen::Index>(g)) = grad_A.cwiseProduct(obj.graphs[g].weights * V).sum();
  const Matrix residual = alignment_residual(beta, obj);
  for (std::size_t g = 0; g < obj.graphs.size(); ++g)
    grad(static_cast<Eigen::Index>(g)) += obj.gamma * sign_of_slot(obj, g) * residual.cwiseProduct(obj.graphs[g].weights).sum();
  return grad;
}

std::vector<char> free_beta_coordinates(const Objective& obj) {
  std::vector<char> free(obj.graphs.size(), 1);
  if (obj.has_image_slot && obj.graphs.front().zero_init && obj.graphs.size() > 1) free[0] = 0;
  return free;
}

Vector initial_beta(const Objective& obj) {
  const auto free = free_beta_coordinates(obj);
  const auto count = std::count(free.begin(), free.end(), 1);
  Vector beta = Vector::Zero(obj.num_weights());
  for (std::size_t g = 0; g < free.size(); ++g)
    if (free[g]) beta(static_cast<Eigen::Index>(g)) = 1.0 / static_cast<double>(count);
  return beta;
}

Matrix solve_V(const Vector& beta, const Objective& obj, const SolverSettings& settings, const Matrix& V_init) {
  check_shapes(V_init, beta, obj);
  check_simplex(beta, 1e-6, "solve_V");
  const Matrix blended = blend_weights(beta, obj.graphs);
  const Matrix blended_t = blended.transpose();

  // The alignment term does not depend on V, so only hinge + ridge are tracked.
  Matrix V = V_init;
  Matrix A_seen = blended * V;
  auto ev = evaluate_seen(A_seen, obj);
  double f = ev.value();
  if (!std::isfinite(f)) fail("solve_V: non-finite objective at the initial point");

  for (int step = 0; step < settings.v_max_steps; ++step) {
    const Matrix grad = blended_t * seen_gradient(A_seen, ev, obj);
    const double grad_norm = grad.norm();
    if (grad_norm == 0.0 || !std::isfinite(grad_norm)) break;

    // Truncated CG on the generalized Newton system H p = -grad.
    Matrix p = Matrix::Zero(V.rows(), V.cols());
    Matrix r = -grad;
    Matrix d = r;
    double rr = r.squaredNorm();
    const double stop = settings.cg_tolerance * grad_norm;
    for (int it = 0; it < settings.cg_max_iters && std::sqrt(rr) > stop; ++it) {
      const Matrix Hd = blended_t * seen_curvature(blended * d, ev, obj);
      const double curvature = d.cwiseProduct(Hd).sum();
      if (!(curvature > 1e-14 * d.squaredNorm())) break;
      const double alpha = rr / curvature;
      p += alpha * d;
      r -= alpha * Hd;
      const double rr_next = r.squaredNorm();
      d = r + (rr_next / rr) * d;
      rr = rr_next;
    }

    Matrix V_next;
    Matrix A_next;
    SeenEvaluation ev_next;
    const auto line_search = [&](const Matrix& direction, double slope) {
      double t = 1.0;
      for (int bt = 0; bt < settings.max_backtracks; ++bt, t *= 0.5) {
        V_next = V + t * direction;
        A_next = blended * V_next;
        ev_next = evaluate_seen(A_next, obj);
        const double f_next = ev_next.value();
        if (std::isfinite(f_next) && f_next <= f + settings.armijo * t * slope) return true;
      }
      return false;
    };
    const double newton_slope = grad.cwiseProduct(p).sum();
    bool accepted = newton_slope < 0.0 && line_search(p, newton_slope);
    if (!accepted) accepted = line_search(-grad, -grad_norm * grad_norm);
    if (!accepted) break;

    const double f_next = ev_next.value();
    const double rel = relative_decrease(f, f_next);
    V = std::move(V_next);
    A_seen = std::move(A_next);
    ev = std::move(ev_next);
    f = f_next;
    if (rel < settings.v_tolerance) break;
  }
  return V;
}

namespace {

// The beta subproblem with V fixed: scores are linear in beta, so the
// per-graph score matrices are formed once and reused for every evaluation.
class BetaProblem {
public:
  BetaProblem(const Matrix& V, const Objective& obj) : obj_(obj) {
    const auto k = obj.graphs.size();
    scores_.resize(k);
    std::vector<Matrix> synthesized(k);
    for (std::size_t g = 0; g < k; ++g) {
      synthesized[g] = obj.graphs[g].weights * V;
      kernels::row_scores(obj.train->features, synthesized[g], scores_[g]);
    }
    quadratic_ = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t g = 0; g < k; ++g) {
      for (std::size_t h = 0; h <= g; ++h) {
        const double value = obj.lambda * synthesized[g].cwiseProduct(synthesized[h]).sum() +
                             obj.gamma * sign_of_slot(obj, g) * sign_of_slot(obj, h) *
                                 obj.graphs[g].weights.cwiseProduct(obj.graphs[h].weights).sum();
        quadratic_(g, h) = value;
        quadratic_(h, g) = value;
      }
    }
  }

  struct Evaluation {
    double value = 0.0;
    kernels::HingeTerms terms;
  };

  Evaluation evaluate(const Vector& beta) const {
    Matrix z = beta(0) * scores_[0];
    for (std::size_t g = 1; g < scores_.size(); ++g) z += beta(static_cast<Eigen::Index>(g)) * scores_[g];
    Evaluation ev;
    ev.terms = kernels::hinge_terms(z, obj_.train->labels, obj_.hinge);
    for (Eigen::Index c = 0; c < ev.terms.class_loss.size(); ++c) ev.value += ev.terms.class_loss(c);
    ev.value += 0.5 * beta.dot(quadratic_ * beta);
    return ev;
  }

  Vector gradient(const Vector& beta, const Evaluation& ev) const {
    Vector grad = quadratic_ * beta;
    for (std::size_t g = 0; g < scores_.size(); ++g)
      grad(static_cast<Eigen::Index>(g)) += ev.terms.slope.cwiseProduct(scores_[g]).sum();
    return grad;
  }

  Matrix hessian(const Evaluation& ev) const {
    Matrix H = quadratic_;
    if (obj_.hinge != Hinge::squared) return H;
    const auto k = scores_.size();
    for (std::size_t g = 0; g < k; ++g) {
      const Matrix weighted = ev.terms.active.cwiseProduct(scores_[g]);
      for (std::size_t h = 0; h <= g; ++h) {
        const double value = 2.0 * weighted.cwiseProduct(scores_[h]).sum();
        H(g, h) += value;
        if (h != g) H(h, g) += value;
      }
    }
    return H;
  }

private:
  const Objective& obj_;
  std::vector<Matrix> scores_;
  Matrix quadratic_;
};

}  // namespace

Vector solve_beta(const Matrix& V, const Objective& obj, const SolverSettings& settings, const Vector& beta_init) {
  check_shapes(V, beta_init, obj);
  check_simplex(beta_init, 1e-6, "solve_beta");
  require(V.allFinite(), "solve_beta: V must be finite");

  const auto free = free_beta_coordinates(obj);
  Vector beta = project_to_simplex(beta_init, free);
  if (std::count(free.begin(), free.end(), 1) <= 1) return beta;

  const BetaProblem problem(V, obj);
  auto ev = problem.evaluate(beta);
  for (int step = 0; step < settings.beta_max_steps; ++step) {
    const Vector grad = problem.gradient(beta, ev);
    const Matrix H = problem.hessian(ev);
    const Vector target = minimize_quadratic_on_simplex(H, grad - H * beta, free);
    const Vector direction = target - beta;
    const double slope = grad.dot(direction);
    if (!(slope < 0.0)) break;

    bool accepted = false;
    Vector next;
    BetaProblem::Evaluation ev_next;
    double t = 1.0;
    for (int bt = 0; bt < settings.max_backtracks; ++bt, t *= 0.5) {
      next = project_to_simplex(beta + t * direction, free);
      ev_next = problem.evaluate(next);
      if (std::isfinite(ev_next.value) && ev_next.value <= ev.value + settings.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double rel = relative_decrease(ev.value, ev_next.value);
    beta = std::move(next);
    ev = std::move(ev_next);
    if (rel < settings.beta_tolerance) break;
  }

  // Guard the contract in the canonical objective, not the reformulated one.
  const double before = loss_value(V, project_to_simplex(beta_init, free), obj);
  const double after = loss_value(V, beta, obj);
  if (!(after <= before)) return project_to_simplex(beta_init, free);
  return beta;
}

AlternateResult alternate(const Objective& obj, const SolverSettings& settings, const std::optional<WarmStart>& warm) {
  obj.validate();
  settings.validate();
  const auto free = free_beta_coordinates(obj);
  const auto free_count = std::count(free.begin(), free.end(), 1);

  AlternateResult result;
  result.V = Matrix::Zero(obj.num_unseen(), obj.dim());
  result.beta = initial_beta(obj);
  if (warm) {
    if (warm->V.rows() == result.V.rows() && warm->V.cols() == result.V.cols() && warm->V.allFinite())
      result.V = warm->V;
    bool pinned_clear = warm->beta.size() == result.beta.size();
    for (std::size_t g = 0; pinned_clear && g < free.size(); ++g)
      if (!free[g] && warm->beta(static_cast<Eigen::Index>(g)) != 0.0) pinned_clear = false;
    if (pinned_clear) result.beta = project_to_simplex(warm->beta, free);
  }

  double f = loss_value(result.V, result.beta, obj);
  result.trace.push_back(f);
  for (int it = 0; it < settings.max_outer_iters; ++it) {
    result.V = solve_V(result.beta, obj, settings, result.V);
    if (free_count > 1) result.beta = solve_beta(result.V, obj, settings, result.beta);
    const double f_next = loss_value(result.V, result.beta, obj);
    result.trace.push_back(f_next);
    ++result.outer_iterations;
    const double rel = relative_decrease(f, f_next);
    f = f_next;
    // With at most one free weight there is nothing to alternate over.
    if (free_count <= 1 || rel < settings.outer_tolerance) break;
  }
  return result;
}

}  // namespace sp
