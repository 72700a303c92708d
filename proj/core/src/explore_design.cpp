#include "mtrl/explore_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include <fmt/format.h>

#include "mtrl/errors.hpp"
#include "mtrl/simplex.hpp"

namespace mtrl::design {

namespace {

using linalg::Index;

constexpr double kWeightFloor = 1e-15;
constexpr int kCutsPerRound = 20;

// One sampled state in the epigraph program. Actions with identical psi are
// merged into a class; the class mass is split evenly among its actions.
struct StateTerm {
  int state = 0;
  double weight = 0.0;
  std::vector<std::vector<int>> classes;
  Matrix class_psi;  // n_classes x d
  // f(psi_c, x_k) for every class and net point; shared between copies.
  std::shared_ptr<const Matrix> f_net;
};

struct LpOutcome {
  std::vector<Vector> mass;  // per term, per class
  double value = 0.0;        // min over the whole net
  int pivots = 0;
  int cuts = 0;
};

double f_value(double ip, double sqrt_d, double xi_d) {
  return std::abs(ip) * sqrt_d - xi_d * ip * ip;
}

std::vector<std::vector<int>> action_classes(const LinearMdp& env, int s) {
  std::vector<std::vector<int>> classes;
  std::vector<int> rep;
  for (int a = 0; a < env.n_actions(); ++a) {
    bool placed = false;
    for (std::size_t c = 0; c < rep.size(); ++c) {
      if (env.psi(s, rep[c]) == env.psi(s, a)) {
        classes[c].push_back(a);
        placed = true;
        break;
      }
    }
    if (!placed) {
      rep.push_back(a);
      classes.push_back({a});
    }
  }
  return classes;
}

StateTerm make_term(const LinearMdp& env, int s, double weight, const XNet& net, double xi) {
  StateTerm term;
  term.state = s;
  term.weight = weight;
  term.classes = action_classes(env, s);
  const Index n = static_cast<Index>(term.classes.size());
  term.class_psi.resize(n, env.feature_dim());
  for (Index c = 0; c < n; ++c) {
    term.class_psi.row(c) = env.psi(s, term.classes[static_cast<std::size_t>(c)].front());
  }
  const double sqrt_d = std::sqrt(static_cast<double>(net.dim));
  const double xi_d = xi * net.dim;
  auto f = std::make_shared<Matrix>(n, net.size());
  for (Index c = 0; c < n; ++c) {
    const Eigen::RowVectorXd psi = term.class_psi.row(c);
    for (int k = 0; k < net.size(); ++k) (*f)(c, k) = f_value(net.dot(k, psi), sqrt_d, xi_d);
  }
  term.f_net = std::move(f);
  return term;
}

// g(term, x) = sum_c mass_c f(psi_c, x), unweighted; rows are terms.
Matrix state_values(const std::vector<StateTerm>& terms, const std::vector<Vector>& mass) {
  const Index n_net = terms.empty() ? 0 : terms.front().f_net->cols();
  Matrix out(static_cast<Index>(terms.size()), n_net);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out.row(static_cast<Index>(i)) = mass[i].transpose() * *terms[i].f_net;
  }
  return out;
}

Vector net_values(const std::vector<StateTerm>& terms, const std::vector<Vector>& mass) {
  const Index n_net = terms.empty() ? 0 : terms.front().f_net->cols();
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n_net);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    acc.noalias() += (terms[i].weight * mass[i]).transpose() * *terms[i].f_net;
  }
  return acc.transpose();
}

// Coefficients of sum_i w_i sum_c f(psi_ic, x) mass_ic over the stacked classes.
Vector cut_coefficients(const std::vector<StateTerm>& terms, int n_cols, int k) {
  Vector row = Vector::Zero(n_cols);
  int col = 0;
  for (const StateTerm& term : terms) {
    for (Index c = 0; c < term.class_psi.rows(); ++c) {
      row(col++) = term.weight * (*term.f_net)(c, k);
    }
  }
  return row;
}

std::vector<Vector> split_mass(const std::vector<StateTerm>& terms, const Vector& x) {
  std::vector<Vector> mass;
  int col = 0;
  for (const StateTerm& term : terms) {
    const Index n = term.class_psi.rows();
    Vector m = x.segment(col, n).cwiseMax(0.0);
    const double total = m.sum();
    m = total > 0.0 ? Vector(m / total) : Vector::Constant(n, 1.0 / n);
    mass.push_back(std::move(m));
    col += static_cast<int>(n);
  }
  return mass;
}

std::vector<int> most_violated(const Vector& values, double threshold,
                               const std::vector<char>& in_set) {
  std::vector<int> idx;
  for (Index k = 0; k < values.size(); ++k) {
    if (values(k) < threshold && !in_set[k]) idx.push_back(static_cast<int>(k));
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values(a) < values(b); });
  if (idx.size() > static_cast<std::size_t>(kCutsPerRound)) idx.resize(kCutsPerRound);
  return idx;
}

void add_simplex_rows(lp::DenseSimplex& lp, const std::vector<StateTerm>& terms) {
  int col = 0;
  for (const StateTerm& term : terms) {
    Vector row = Vector::Zero(lp.n_vars());
    row.segment(col, term.class_psi.rows()).setOnes();
    lp.add_row(row, lp::Sense::kEqual, 1.0);
    col += static_cast<int>(term.class_psi.rows());
  }
}

void require_optimal(lp::Status status) {
  if (status != lp::Status::kOptimal) {
    throw InvariantError(fmt::format("design LP did not reach optimality ({})",
                                     lp::to_string(status)));
  }
}

// Maximin over the net by cutting planes. With `spread`, the same program then
// maximizes the sum over states of the smallest per-action probability while
// keeping t within a tolerance of the optimum, which selects spread-out
// policies when the optimum is not unique. Both phases warm-start.
LpOutcome solve_epigraph(const std::vector<StateTerm>& terms, const XNet& net,
                         bool spread) {
  LpOutcome out;
  if (terms.empty()) {
    out.value = 0.0;
    return out;
  }
  int n_cols = 0;
  for (const StateTerm& term : terms) n_cols += static_cast<int>(term.class_psi.rows());
  const int n_terms = static_cast<int>(terms.size());
  const int t_plus = n_cols;
  const int t_minus = n_cols + 1;
  const int n_vars = n_cols + 2 + (spread ? n_terms : 0);

  // Variables: class masses, t+ and t-, then one spread variable per state.
  lp::DenseSimplex lp(n_vars);
  Vector c = Vector::Zero(n_vars);
  c(t_plus) = 1.0;
  c(t_minus) = -1.0;
  lp.set_objective(c);
  add_simplex_rows(lp, terms);

  std::vector<Vector> mass;
  for (const StateTerm& term : terms) {
    Vector m(term.class_psi.rows());
    for (std::size_t k = 0; k < term.classes.size(); ++k) {
      m(static_cast<Index>(k)) = static_cast<double>(term.classes[k].size());
    }
    mass.push_back(m / m.sum());
  }
  std::vector<char> in_set(net.size(), 0);
  auto add_cut = [&](int k) {
    const Vector coeff = cut_coefficients(terms, n_cols, k);
    Vector row = Vector::Zero(n_vars);
    row.head(n_cols) = -coeff;
    row(t_plus) = 1.0;
    row(t_minus) = -1.0;
    lp.add_row(row, lp::Sense::kLessEqual, 0.0);
    in_set[k] = 1;
    ++out.cuts;
  };
  // Adds violated cuts until none remain below `threshold(t)`; returns the
  // final masses.
  auto cut_loop = [&](auto threshold) {
    while (true) {
      require_optimal(lp.solve());
      out.pivots += lp.iterations();
      const Vector x = lp.primal();
      mass = split_mass(terms, x.head(n_cols));
      const Vector values = net_values(terms, mass);
      const std::vector<int> add =
          most_violated(values, threshold(x(t_plus) - x(t_minus)), in_set);
      if (add.empty()) return values;
      for (int k : add) add_cut(k);
    }
  };

  Vector values = net_values(terms, mass);
  Index first = 0;
  values.minCoeff(&first);
  add_cut(static_cast<int>(first));
  values = cut_loop([](double t) { return t - 1e-9 * (1.0 + std::abs(t)); });
  out.value = values.minCoeff();
  out.mass = mass;
  if (!spread) return out;

  const double floor = out.value - 1e-9 * (1.0 + std::abs(out.value));
  Vector floor_row = Vector::Zero(n_vars);
  floor_row(t_plus) = 1.0;
  floor_row(t_minus) = -1.0;
  lp.add_row(floor_row, lp::Sense::kGreaterEqual, floor);
  int col = 0;
  for (int i = 0; i < n_terms; ++i) {
    for (std::size_t k = 0; k < terms[i].classes.size(); ++k) {
      Vector row = Vector::Zero(n_vars);
      row(n_cols + 2 + i) = 1.0;
      row(col + static_cast<int>(k)) = -1.0 / static_cast<double>(terms[i].classes[k].size());
      lp.add_row(row, lp::Sense::kLessEqual, 0.0);
    }
    col += static_cast<int>(terms[i].classes.size());
  }
  Vector c2 = Vector::Zero(n_vars);
  c2.tail(n_terms).setOnes();
  lp.set_objective(c2);
  const std::vector<Vector> optimum_mass = out.mass;
  const double tol = 1e-9 * (1.0 + std::abs(floor));
  const Vector v2 = cut_loop([&](double) { return floor - tol; });
  const double v = v2.minCoeff();
  if (v >= floor - tol) {
    out.mass = mass;
    out.value = v;
  } else {
    out.mass = optimum_mass;
  }
  return out;
}

void write_policy_rows(const std::vector<StateTerm>& terms, const std::vector<Vector>& mass,
                       Matrix& pi) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const StateTerm& term = terms[i];
    pi.row(term.state).setZero();
    for (std::size_t c = 0; c < term.classes.size(); ++c) {
      const double share = mass[i](static_cast<Index>(c)) /
                           static_cast<double>(term.classes[c].size());
      for (int a : term.classes[c]) pi(term.state, a) = share;
    }
    pi.row(term.state) /= pi.row(term.state).sum();
  }
}

// Distinct sampled states at step h, ascending, with sample counts.
std::map<int, int> sampled_states(const FeatureBasis& basis, int h) {
  std::map<int, int> counts;
  for (int s : basis.states.at(h)) ++counts[s];
  return counts;
}

MinimaxSolution empty_solution(const LinearMdp& env, int h, const XNet& net,
                               const std::map<int, int>& states) {
  MinimaxSolution sol;
  sol.h = h;
  sol.pi = Matrix::Constant(env.n_states(), env.n_actions(), 1.0 / env.n_actions());
  sol.sampled.assign(env.n_states(), 0);
  for (const auto& [s, n] : states) sol.sampled[s] = 1;
  sol.x_net_size = net.size();
  return sol;
}

void check_inputs(const FeatureBasis& basis, const LinearMdp& env, const XNet& net, int h) {
  if (net.size() == 0) throw ParameterError("design: x_net must not be empty");
  if (net.dim != env.feature_dim()) throw DimensionError("design: x_net dimension");
  if (h < 0 || h >= basis.horizon() || basis.M < 1) {
    throw DimensionError("design: basis does not cover the requested step");
  }
}

}  // namespace

double FeatureBasis::lambda_min(int h) const {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.at(h), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

FeatureBasis collect_feature_basis(const LinearMdp& env,
                                   const planner::EmpiricalModel& model, Engine& rng,
                                   const CoverageOptions& options) {
  const int H = env.horizon();
  const int S = env.n_states();
  const int A = env.n_actions();
  const int d = env.feature_dim();
  if (model.horizon() != H || model.n_states() != S || model.n_actions() != A) {
    throw DimensionError("collect_feature_basis: model does not match env");
  }
  const mdp::RewardFreeView view(env);
  FeatureBasis basis;
  basis.states.assign(H, {});
  basis.actions.assign(H, {});
  basis.gram.assign(H, Matrix::Zero(d, d));

  int worst_h = 0;
  Vector worst_dir = Vector::Unit(d, 0);
  for (int round = 0; round <= options.max_rounds; ++round) {
    // Eigen-directions of G_h below the unit threshold, weakest first.
    std::vector<Matrix> weak(H);
    double lowest = std::numeric_limits<double>::infinity();
    for (int h = 0; h < H; ++h) {
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(basis.gram[h]);
      int n_weak = 0;
      while (n_weak < d && eig.eigenvalues()(n_weak) < 1.0) ++n_weak;
      weak[h] = eig.eigenvectors().leftCols(n_weak);
      if (eig.eigenvalues()(0) < lowest) {
        lowest = eig.eigenvalues()(0);
        worst_h = h;
        worst_dir = eig.eigenvectors().col(0);
      }
    }
    if (lowest >= 1.0) {
      basis.rounds = round;
      basis.phi.clear();
      for (int h = 0; h < H; ++h) {
        Matrix phi(basis.M, d);
        for (int m = 0; m < basis.M; ++m) {
          phi.row(m) = env.phi(basis.states[h][m], basis.actions[h][m]);
        }
        basis.phi.push_back(std::move(phi));
      }
      return basis;
    }
    if (round == options.max_rounds) break;

    const Matrix& phi_all = env.phi_table();
    auto pseudo_rewards = [&](int h, const Vector& dir, mdp::RewardTable& table) {
      const Vector p = phi_all * dir;
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) table.per_step[h](s, a) = p(s * A + a) * p(s * A + a);
      }
    };

    mdp::RewardTable single = mdp::RewardTable::zeros(S, A, H);
    pseudo_rewards(worst_h, worst_dir, single);
    if (planner::plan(model, single).values.initial_value(view.initial_dist()) <= 1e-12) {
      throw CoverageUnattainable(
          worst_h, worst_dir,
          fmt::format("coverage unattainable at step {}: no reachable feature along the "
                      "weakest direction",
                      worst_h));
    }

    // Episode e of the batch chases the e-th weakest direction at every step
    // that still lacks coverage.
    for (int e = 0; e < options.batch_episodes; ++e) {
      mdp::RewardTable pseudo = mdp::RewardTable::zeros(S, A, H);
      for (int h = 0; h < H; ++h) {
        if (weak[h].cols() == 0) continue;
        pseudo_rewards(h, weak[h].col(e % weak[h].cols()), pseudo);
      }
      const planner::PlanResult planned = planner::plan(model, pseudo);
      int s = view.sample_initial(rng);
      for (int h = 0; h < H; ++h) {
        const int a = mdp::sample_categorical(planned.policy.step(h).row(s), rng);
        basis.states[h].push_back(s);
        basis.actions[h].push_back(a);
        const auto phi = env.phi(s, a);
        basis.gram[h].noalias() += phi.transpose() * phi;
        s = view.sample_next(s, a, h, rng);
      }
      ++basis.M;
    }
  }
  throw CoverageUnattainable(worst_h, worst_dir,
                             fmt::format("coverage not reached within {} rounds at step {}",
                                         options.max_rounds, worst_h));
}

double XNet::dot(int k, const Eigen::Ref<const Eigen::RowVectorXd>& v) const {
  double acc = 0.0;
  for (const auto& [i, x] : points[k]) acc += x * v(i);
  return acc;
}

Vector XNet::dense(int k) const {
  Vector out = Vector::Zero(dim);
  for (const auto& [i, x] : points.at(k)) out(i) = x;
  return out;
}

XNet XNet::from_dense(const Matrix& columns) {
  XNet net;
  net.dim = static_cast<int>(columns.rows());
  for (Index k = 0; k < columns.cols(); ++k) {
    const double n = columns.col(k).norm();
    if (std::abs(n - 1.0) > 1e-9) throw ParameterError("XNet: points must be unit vectors");
    std::vector<std::pair<int, double>> point;
    for (Index i = 0; i < columns.rows(); ++i) {
      if (columns(i, k) != 0.0) point.emplace_back(static_cast<int>(i), columns(i, k));
    }
    net.points.push_back(std::move(point));
  }
  return net;
}

int default_x_net_size(int d) { return 2 * d * d; }

XNet build_x_net(int d, int size, std::uint64_t seed) {
  if (d < 1 || size < 1) throw ParameterError("build_x_net: d and size must be positive");
  XNet net;
  net.dim = d;
  const double h = 1.0 / std::sqrt(2.0);
  auto push = [&](std::vector<std::pair<int, double>> p) {
    if (net.size() < size) net.points.push_back(std::move(p));
  };
  for (int i = 0; i < d; ++i) {
    push({{i, 1.0}});
    push({{i, -1.0}});
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      push({{i, h}, {j, h}});
      push({{i, -h}, {j, -h}});
      push({{i, h}, {j, -h}});
      push({{i, -h}, {j, h}});
    }
  }
  Engine rng = make_engine(seed, Stream::kDesignNet);
  while (net.size() < size) {
    Vector g(d);
    for (int i = 0; i < d; ++i) g(i) = standard_normal(rng);
    const double n = g.norm();
    if (n == 0.0) continue;
    std::vector<std::pair<int, double>> p;
    for (int i = 0; i < d; ++i) p.emplace_back(i, g(i) / n);
    net.points.push_back(std::move(p));
  }
  return net;
}

double eval_f(const Vector& psi, const Vector& x, double xi) {
  if (psi.size() != x.size()) throw DimensionError("eval_f: size mismatch");
  if (std::abs(x.norm() - 1.0) > 1e-9) throw ParameterError("eval_f: x must be a unit vector");
  const double d = static_cast<double>(psi.size());
  const double ip = x.dot(psi);
  return std::abs(ip) * std::sqrt(d) - xi * d * ip * ip;
}

MinimaxSolution solve_pi1(const FeatureBasis& basis, const LinearMdp& env, double xi,
                          const XNet& net) {
  check_inputs(basis, env, net, 0);
  const auto states = sampled_states(basis, 0);
  MinimaxSolution sol = empty_solution(env, 0, net, states);
  std::vector<StateTerm> terms;
  for (const auto& [s, n] : states) {
    terms.push_back(make_term(env, s, static_cast<double>(n) / basis.M, net, xi));
  }
  const LpOutcome out = solve_epigraph(terms, net, true);
  write_policy_rows(terms, out.mass, sol.pi);
  sol.value = out.value;
  sol.iterations = 1;
  sol.lp_pivots = out.pivots;
  sol.cuts = out.cuts;
  sol.value_history = {out.value};
  return sol;
}

MinimaxSolution solve_pih(const FeatureBasis& basis, const LinearMdp& env, int h, double xi,
                          const XNet& net, const AlternationOptions& options) {
  check_inputs(basis, env, net, h);
  if (h < 1) throw ParameterError("solve_pih: h must be a later step");
  if (options.n_alternations < 1 || options.nu_iterations < 0) {
    throw ParameterError("solve_pih: invalid alternation options");
  }
  const int d = env.feature_dim();
  const auto states = sampled_states(basis, h);
  MinimaxSolution sol = empty_solution(env, h, net, states);

  // Z = G_{h-1}^{-1} [sum of phi_{m,h-1} over samples landing in s] / M, so
  // the per-state weight is (Z^T nu)_s.
  std::map<int, int> column;
  for (const auto& [s, n] : states) column.emplace(s, static_cast<int>(column.size()));
  Matrix agg = Matrix::Zero(d, static_cast<Index>(states.size()));
  for (int m = 0; m < basis.M; ++m) {
    agg.col(column.at(basis.states[h][m])) += basis.phi[h - 1].row(m).transpose();
  }
  const Eigen::LDLT<Matrix> gram(basis.gram[h - 1]);
  const Matrix z = gram.solve(agg) / static_cast<double>(basis.M);

  std::vector<StateTerm> all_terms;
  for (const auto& [s, n] : states) all_terms.push_back(make_term(env, s, 0.0, net, xi));

  Vector nu = basis.phi[h - 1].colwise().mean().transpose();
  nu = nu.norm() > 0.0 ? Vector(nu / nu.norm()) : Vector(Vector::Unit(d, 0));

  double best = -std::numeric_limits<double>::infinity();
  std::vector<StateTerm> best_terms;
  Vector best_nu = nu;
  sol.converged = false;
  for (int alt = 1; alt <= options.n_alternations; ++alt) {
    const Vector w = z.transpose() * nu;
    std::vector<StateTerm> terms;
    for (std::size_t i = 0; i < all_terms.size(); ++i) {
      if (std::abs(w(static_cast<Index>(i))) <= kWeightFloor) continue;
      terms.push_back(all_terms[i]);
      terms.back().weight = w(static_cast<Index>(i));
    }
    const LpOutcome out = solve_epigraph(terms, net, false);
    sol.lp_pivots += out.pivots;
    sol.cuts += out.cuts;
    sol.iterations = alt;
    const bool improved = out.value > best + 1e-9 * (1.0 + std::abs(best)) || alt == 1;
    if (out.value > best) {
      best = out.value;
      best_terms = terms;
      best_nu = nu;
    }
    sol.value_history.push_back(best);
    if (!improved) {
      sol.converged = true;
      break;
    }

    // nu-step with pi fixed: maximize min_x sum_s (Z^T nu)_s g(s, x) over the ball.
    std::vector<Vector> mass;
    for (std::size_t i = 0; i < all_terms.size(); ++i) {
      const auto it = std::find_if(terms.begin(), terms.end(), [&](const StateTerm& t) {
        return t.state == all_terms[i].state;
      });
      if (it != terms.end()) {
        mass.push_back(out.mass[static_cast<std::size_t>(it - terms.begin())]);
      } else {
        const Index n = all_terms[i].class_psi.rows();
        Vector m(n);
        for (Index c = 0; c < n; ++c) {
          m(c) = static_cast<double>(all_terms[i].classes[c].size()) / env.n_actions();
        }
        mass.push_back(m);
      }
    }
    const Matrix g = state_values(all_terms, mass);  // states x net
    Vector current = nu;
    Vector step_best = nu;
    double step_best_value = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= options.nu_iterations + 1; ++k) {
      const Vector vals = g.transpose() * (z.transpose() * current);
      Index arg = 0;
      const double v = vals.minCoeff(&arg);
      if (v > step_best_value) {
        step_best_value = v;
        step_best = current;
      }
      if (k > options.nu_iterations) break;
      const Vector grad = z * g.col(arg);
      const double gn = grad.norm();
      if (gn == 0.0) break;
      current += grad / (gn * std::sqrt(static_cast<double>(k)));
      const double n = current.norm();
      if (n > 1.0) current /= n;
    }
    nu = step_best;
  }

  if (best_terms.empty()) {
    sol.value = std::max(best, 0.0);
    sol.nu = best_nu;
    return sol;
  }
  const LpOutcome final_out = solve_epigraph(best_terms, net, true);
  sol.lp_pivots += final_out.pivots;
  write_policy_rows(best_terms, final_out.mass, sol.pi);
  sol.value = final_out.value;
  sol.nu = best_nu;
  return sol;
}

TabularPolicy assemble_exploration_policy(const std::vector<MinimaxSolution>& solutions,
                                          const LinearMdp& env) {
  const int S = env.n_states();
  const int A = env.n_actions();
  if (static_cast<int>(solutions.size()) != env.horizon()) {
    throw DimensionError("assemble_exploration_policy: need one solution per step");
  }
  std::vector<Matrix> steps;
  for (const MinimaxSolution& sol : solutions) {
    if (sol.pi.rows() != S || sol.pi.cols() != A ||
        static_cast<int>(sol.sampled.size()) != S) {
      throw DimensionError("assemble_exploration_policy: solution shape");
    }
    Matrix pi = Matrix::Constant(S, A, 1.0 / A);
    std::vector<int> sampled;
    for (int s = 0; s < S; ++s) {
      if (sol.sampled[s]) {
        pi.row(s) = sol.pi.row(s);
        sampled.push_back(s);
      }
    }
    if (!sampled.empty()) {
      for (int s = 0; s < S; ++s) {
        if (sol.sampled[s]) continue;
        int nearest = -1;
        int nearest_dist = std::numeric_limits<int>::max();
        for (int q : sampled) {
          const auto dist = env.state_distance(s, q);
          if (!dist) break;
          if (*dist < nearest_dist) {
            nearest_dist = *dist;
            nearest = q;
          }
        }
        if (nearest >= 0) pi.row(s) = sol.pi.row(nearest);
      }
    }
    steps.push_back(std::move(pi));
  }
  return TabularPolicy(std::move(steps));
}

DesignDiagnostics design_from_samples(const Matrix& psi_rows, const XNet& net) {
  if (psi_rows.cols() != net.dim) throw DimensionError("design_from_samples: dimension");
  if (net.size() == 0) throw ParameterError("design_from_samples: empty x_net");
  DesignDiagnostics out;
  const Index n = psi_rows.rows();
  const double d = static_cast<double>(net.dim);
  out.cov_psi = Matrix::Zero(net.dim, net.dim);
  if (n == 0) {
    out.xi_hat = std::numeric_limits<double>::infinity();
    return out;
  }
  out.cov_psi = psi_rows.transpose() * psi_rows / static_cast<double>(n);
  out.cov_psi = 0.5 * (out.cov_psi + out.cov_psi.transpose()).eval();
  // Policies visit finitely many (s, a) pairs, so distinct rows are few.
  std::map<std::vector<double>, int> distinct;
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row = psi_rows.row(i);
    ++distinct[std::vector<double>(row.data(), row.data() + row.size())];
  }
  double zeta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < net.size(); ++k) {
    double acc = 0.0;
    for (const auto& [row, count] : distinct) {
      double ip = 0.0;
      for (const auto& [j, x] : net.points[k]) ip += x * row[static_cast<std::size_t>(j)];
      acc += count * std::abs(ip);
    }
    zeta = std::min(zeta, acc / static_cast<double>(n));
  }
  out.zeta_hat = std::sqrt(d) * zeta;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(out.cov_psi, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues()(net.dim - 1);
  out.xi_hat = lmax > 0.0 ? 1.0 / std::sqrt(d * lmax) : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<DesignDiagnostics> measure_design(const LinearMdp& env, const TabularPolicy& policy,
                                              int n_probe, const XNet& net, Engine& rng) {
  if (n_probe < 1) throw ParameterError("measure_design: n_probe must be positive");
  const int H = env.horizon();
  std::vector<Matrix> rows(H, Matrix(n_probe, env.feature_dim()));
  const mdp::RewardFreeView view(env);
  for (int e = 0; e < n_probe; ++e) {
    int s = view.sample_initial(rng);
    for (int h = 0; h < H; ++h) {
      const int a = mdp::sample_categorical(policy.step(h).row(s), rng);
      rows[h].row(e) = env.psi(s, a);
      if (h + 1 < H) s = view.sample_next(s, a, h, rng);
    }
  }
  std::vector<DesignDiagnostics> out;
  for (int h = 0; h < H; ++h) {
    out.push_back(design_from_samples(rows[h], net));
    out.back().h = h;
  }
  return out;
}

}  // namespace mtrl::design
