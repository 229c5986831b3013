#include "spatialecon/pls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "spatialecon/descriptive.hpp"
#include "spatialecon/error.hpp"
#include "spatialecon/ols.hpp"
#include "spatialecon/parallel.hpp"
#include "spatialecon/rng.hpp"

namespace spatialecon::pls {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Error pls_error(ErrorKind kind, const std::string& op, const std::string& msg) {
  return Error(kind, "pls_sem", op, msg);
}

struct Standardized {
  Eigen::MatrixXd z;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;
};

Standardized standardize_data(const Eigen::Ref<const Eigen::MatrixXd>& data,
                              const std::vector<std::string>& names, const std::string& op) {
  const Eigen::Index n = data.rows();
  Standardized s{data, data.colwise().mean(), Eigen::RowVectorXd(data.cols())};
  s.z.rowwise() -= s.mean;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double sd = std::sqrt(s.z.col(c).squaredNorm() / double(n - 1));
    const double scale = std::max(std::abs(s.mean(c)), 1.0);
    if (!(sd > 1e-12 * scale))
      throw pls_error(ErrorKind::Degenerate, op,
                      "indicator " + names[std::size_t(c)] + " has zero variance");
    s.sd(c) = sd;
    s.z.col(c) /= sd;
  }
  return s;
}

Eigen::MatrixXd block_of(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(x.rows(), Eigen::Index(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(Eigen::Index(k)) = x.col(cols[k]);
  return out;
}

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols) {
  return block_of(x, cols);
}

Eigen::MatrixXd correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                   const std::vector<std::string>& names, const std::string& op) {
  const auto s = standardize_data(data, names, op);
  return s.z.transpose() * s.z / double(data.rows() - 1);
}

double mean_off_diagonal_abs(const Eigen::MatrixXd& r, const std::vector<Eigen::Index>& block) {
  if (block.size() < 2) return 1.0;
  double sum = 0.0;
  int count = 0;
  for (std::size_t a = 0; a < block.size(); ++a)
    for (std::size_t b = a + 1; b < block.size(); ++b) {
      sum += std::abs(r(block[a], block[b]));
      ++count;
    }
  return sum / count;
}

}  // namespace

// ---------------------------------------------------------------- PathModel

PathModel::PathModel(std::vector<std::string> constructs,
                     std::vector<std::vector<std::string>> blocks,
                     std::vector<std::pair<std::string, std::string>> edges)
    : constructs_(std::move(constructs)), blocks_(std::move(blocks)) {
  if (constructs_.empty())
    throw pls_error(ErrorKind::Parameter, "model", "model has no constructs");
  if (constructs_.size() != blocks_.size())
    throw pls_error(ErrorKind::Parameter, "model", "every construct needs one indicator block");
  std::set<std::string> names, items;
  for (std::size_t j = 0; j < constructs_.size(); ++j) {
    if (!names.insert(constructs_[j]).second)
      throw pls_error(ErrorKind::Parameter, "model", "duplicate construct " + constructs_[j]);
    if (blocks_[j].empty())
      throw pls_error(ErrorKind::Parameter, "model",
                      "construct " + constructs_[j] + " has no indicators");
    std::vector<Eigen::Index> cols;
    for (const auto& ind : blocks_[j]) {
      if (!items.insert(ind).second)
        throw pls_error(ErrorKind::Parameter, "model",
                        "indicator " + ind + " belongs to more than one block");
      cols.push_back(Eigen::Index(indicators_.size()));
      indicators_.push_back(ind);
    }
    columns_.push_back(std::move(cols));
  }
  pred_.resize(constructs_.size());
  succ_.resize(constructs_.size());
  for (const auto& [from, to] : edges) {
    const auto a = construct_index(from);
    const auto b = construct_index(to);
    if (a == b) throw pls_error(ErrorKind::Parameter, "model", "self-loop on " + from);
    for (const auto& e : edges_)
      if (e.first == a && e.second == b)
        throw pls_error(ErrorKind::Parameter, "model", "duplicate edge " + from + "->" + to);
    edges_.emplace_back(a, b);
    pred_[std::size_t(b)].push_back(a);
    succ_[std::size_t(a)].push_back(b);
  }
  // Kahn's algorithm: every node must be removable.
  std::vector<int> indegree(constructs_.size(), 0);
  for (const auto& e : edges_) ++indegree[std::size_t(e.second)];
  std::vector<Eigen::Index> ready;
  for (std::size_t j = 0; j < indegree.size(); ++j)
    if (indegree[j] == 0) ready.push_back(Eigen::Index(j));
  std::size_t removed = 0;
  while (!ready.empty()) {
    const auto j = ready.back();
    ready.pop_back();
    ++removed;
    for (auto s : succ_[std::size_t(j)])
      if (--indegree[std::size_t(s)] == 0) ready.push_back(s);
  }
  if (removed != constructs_.size())
    throw pls_error(ErrorKind::Parameter, "model", "structural model contains a cycle");
}

PathModel PathModel::from_json(const nlohmann::json& spec) {
  try {
    std::vector<std::string> constructs;
    std::vector<std::vector<std::string>> blocks;
    for (const auto& c : spec.at("constructs")) {
      constructs.push_back(c.at("name").get<std::string>());
      blocks.push_back(c.at("indicators").get<std::vector<std::string>>());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : spec.value("edges", nlohmann::json::array())) {
      if (e.is_array()) edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
      else edges.emplace_back(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    }
    return PathModel(std::move(constructs), std::move(blocks), std::move(edges));
  } catch (const nlohmann::json::exception& ex) {
    throw pls_error(ErrorKind::Format, "model", std::string("bad model spec: ") + ex.what());
  }
}

nlohmann::json PathModel::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (std::size_t j = 0; j < constructs_.size(); ++j)
    cs.push_back({{"name", constructs_[j]}, {"indicators", blocks_[j]}});
  nlohmann::json es = nlohmann::json::array();
  for (const auto& [a, b] : edges_)
    es.push_back({constructs_[std::size_t(a)], constructs_[std::size_t(b)]});
  return {{"constructs", cs}, {"edges", es}};
}

Eigen::Index PathModel::construct_index(std::string_view name) const {
  for (std::size_t j = 0; j < constructs_.size(); ++j)
    if (constructs_[j] == name) return Eigen::Index(j);
  throw pls_error(ErrorKind::Parameter, "model", "unknown construct " + std::string(name));
}

std::string PathModel::edge_label(std::size_t e, std::string_view sep) const {
  return constructs_[std::size_t(edges_[e].first)] + std::string(sep) +
         constructs_[std::size_t(edges_[e].second)];
}

// ---------------------------------------------------------------- fitting

PathEstimates fit_pls(const PathModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const PlsConfig& config, const PathEstimates* reference) {
  const Eigen::Index n = data.rows();
  const Eigen::Index J = model.construct_count();
  if (data.cols() != Eigen::Index(model.indicators().size()))
    throw pls_error(ErrorKind::Alignment, "fit_pls",
                    "data has " + std::to_string(data.cols()) + " columns, model expects " +
                        std::to_string(model.indicators().size()));
  if (!data.allFinite())
    throw pls_error(ErrorKind::Value, "fit_pls", "data contains missing or non-finite entries");
  std::size_t widest = 0;
  for (const auto& b : model.blocks()) widest = std::max(widest, b.size());
  if (n <= Eigen::Index(widest) || n < 3)
    throw pls_error(ErrorKind::InsufficientData, "fit_pls",
                    "need more observations than the largest block");

  const auto S = standardize_data(data, model.indicators(), "fit_pls");
  const double dof = double(n - 1);

  std::vector<Eigen::MatrixXd> X(static_cast<std::size_t>(J));
  std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(J));
  Eigen::MatrixXd Y(n, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    X[std::size_t(j)] = block_of(S.z, model.block_columns(j));
    w[std::size_t(j)] = Eigen::VectorXd::Ones(X[std::size_t(j)].cols());
  }
  auto outer_scores = [&](Eigen::Index j, Eigen::VectorXd& weights) {
    Eigen::VectorXd y = X[std::size_t(j)] * weights;
    const double sd = std::sqrt(y.squaredNorm() / dof);
    if (!(sd > 0.0))
      throw pls_error(ErrorKind::Degenerate, "fit_pls",
                      "construct " + model.constructs()[std::size_t(j)] + " has zero variance");
    weights /= sd;
    Y.col(j) = y / sd;
  };
  for (Eigen::Index j = 0; j < J; ++j) outer_scores(j, w[std::size_t(j)]);

  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd Z(n, J);
  for (int it = 1; it <= config.max_iterations; ++it) {
    for (Eigen::Index j = 0; j < J; ++j) {
      Eigen::VectorXd proxy = Eigen::VectorXd::Zero(n);
      const auto& preds = model.predecessors(j);
      const auto& succs = model.successors(j);
      if (!preds.empty()) {
        const Eigen::MatrixXd P = columns_of(Y, preds);
        const Eigen::VectorXd b = P.colPivHouseholderQr().solve(Y.col(j));
        proxy += P * b;
      }
      for (auto s : succs) proxy += (Y.col(j).dot(Y.col(s)) / dof) * Y.col(s);
      const double sd = std::sqrt(proxy.squaredNorm() / dof);
      Z.col(j) = (preds.empty() && succs.empty()) || !(sd > 0.0) ? Eigen::VectorXd(Y.col(j))
                                                                 : Eigen::VectorXd(proxy / sd);
    }
    double change = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
      Eigen::VectorXd next = X[std::size_t(j)].transpose() * Z.col(j) / dof;
      outer_scores(j, next);
      change = std::max(change, (next - w[std::size_t(j)]).cwiseAbs().maxCoeff());
      w[std::size_t(j)] = std::move(next);
    }
    trace.push_back(change);
    iterations = it;
    if (change < config.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "no convergence after " << config.max_iterations << " iterations; last changes:";
    for (std::size_t k = trace.size() > 5 ? trace.size() - 5 : 0; k < trace.size(); ++k)
      msg << ' ' << trace[k];
    throw pls_error(ErrorKind::Convergence, "fit_pls", msg.str());
  }

  PathEstimates est;
  est.iterations = iterations;
  est.column_mean = S.mean;
  est.column_sd = S.sd;
  const auto p = Eigen::Index(model.indicators().size());
  est.outer_weights.resize(p);
  est.loadings.resize(p);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& cols = model.block_columns(j);
    Eigen::VectorXd lambda = X[std::size_t(j)].transpose() * Y.col(j) / dof;
    bool flip = false;
    if (reference) {
      double agreement = 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k)
        agreement += lambda(Eigen::Index(k)) * reference->loadings(cols[k]);
      flip = agreement < 0.0;
    } else {
      Eigen::Index dominant = 0;
      lambda.cwiseAbs().maxCoeff(&dominant);
      flip = lambda(dominant) < 0.0;
    }
    if (flip) {
      lambda = -lambda;
      w[std::size_t(j)] = -w[std::size_t(j)];
      Y.col(j) = -Y.col(j);
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      est.loadings(cols[k]) = lambda(Eigen::Index(k));
      est.outer_weights(cols[k]) = w[std::size_t(j)](Eigen::Index(k));
    }
  }

  est.scores = Y;
  const Eigen::MatrixXd composite_corr = Y.transpose() * Y / dof;
  est.rho_a = Eigen::VectorXd::Ones(J);
  est.factor_loadings = est.loadings;
  if (config.consistent) {
    for (Eigen::Index j = 0; j < J; ++j) {
      const auto& cols = model.block_columns(j);
      if (cols.size() < 2) continue;
      const Eigen::VectorXd& wj = w[std::size_t(j)];
      const Eigen::MatrixXd s = X[std::size_t(j)].transpose() * X[std::size_t(j)] / dof;
      const Eigen::MatrixXd outer = wj * wj.transpose();
      const double num = wj.dot((s - Eigen::MatrixXd(s.diagonal().asDiagonal())) * wj);
      const double den = wj.dot((outer - Eigen::MatrixXd(outer.diagonal().asDiagonal())) * wj);
      const double c2 = num / den;
      const double ww = wj.squaredNorm();
      const double rho = ww * ww * c2;
      if (!(c2 > 0.0) || !std::isfinite(rho))
        throw pls_error(ErrorKind::Degenerate, "fit_pls",
                        "construct " + model.constructs()[std::size_t(j)] +
                            " has a non-positive rho_A");
      est.rho_a(j) = rho;
      for (std::size_t k = 0; k < cols.size(); ++k)
        est.factor_loadings(cols[k]) = std::sqrt(c2) * wj(Eigen::Index(k));
    }
  }
  est.construct_correlations = composite_corr;
  for (Eigen::Index a = 0; a < J; ++a)
    for (Eigen::Index b = 0; b < J; ++b)
      if (a != b)
        est.construct_correlations(a, b) /= std::sqrt(est.rho_a(a) * est.rho_a(b));

  const Eigen::MatrixXd& R = est.construct_correlations;
  est.paths = Eigen::VectorXd::Zero(Eigen::Index(model.edges().size()));
  est.r_squared = Eigen::VectorXd::Constant(J, kNaN);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& preds = model.predecessors(j);
    if (preds.empty()) continue;
    const auto k = Eigen::Index(preds.size());
    Eigen::MatrixXd rpp(k, k);
    Eigen::VectorXd rpj(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      rpj(a) = R(preds[std::size_t(a)], j);
      for (Eigen::Index b = 0; b < k; ++b) rpp(a, b) = R(preds[std::size_t(a)], preds[std::size_t(b)]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rpp);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
      throw pls_error(ErrorKind::Rank, "fit_pls",
                      "predictors of " + model.constructs()[std::size_t(j)] +
                          " are linearly dependent");
    const Eigen::VectorXd beta = qr.solve(rpj);
    est.r_squared(j) = std::clamp(beta.dot(rpj), 0.0, 1.0);
    for (std::size_t e = 0; e < model.edges().size(); ++e) {
      if (model.edges()[e].second != j) continue;
      const auto it = std::find(preds.begin(), preds.end(), model.edges()[e].first);
      est.paths(Eigen::Index(e)) = beta(Eigen::Index(it - preds.begin()));
    }
  }
  return est;
}

// ---------------------------------------------------------------- quality

double standardized_alpha(const Eigen::Ref<const Eigen::MatrixXd>& r) {
  const Eigen::Index k = r.rows();
  if (k < 2) return 1.0;
  const double mean_r = (r.sum() - r.trace()) / double(k * (k - 1));
  return double(k) * mean_r / (1.0 + double(k - 1) * mean_r);
}

double composite_reliability(const Eigen::Ref<const Eigen::VectorXd>& loadings) {
  const double s = loadings.sum();
  const double error = (1.0 - loadings.array().square()).sum();
  return s * s / (s * s + error);
}

double average_variance_extracted(const Eigen::Ref<const Eigen::VectorXd>& loadings) {
  return loadings.array().square().mean();
}

std::vector<ConstructQuality> measurement_quality(const PathModel& model,
                                                  const PathEstimates& estimates,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& data) {
  const Eigen::MatrixXd r = correlation_matrix(data, model.indicators(), "measurement_quality");
  std::vector<ConstructQuality> out;
  for (Eigen::Index j = 0; j < model.construct_count(); ++j) {
    const auto& cols = model.block_columns(j);
    ConstructQuality q;
    q.construct = model.constructs()[std::size_t(j)];
    q.indicators = Eigen::Index(cols.size());
    if (cols.size() > 1) {
      Eigen::MatrixXd block(q.indicators, q.indicators);
      Eigen::VectorXd lambda(q.indicators);
      for (std::size_t a = 0; a < cols.size(); ++a) {
        lambda(Eigen::Index(a)) = estimates.factor_loadings(cols[a]);
        for (std::size_t b = 0; b < cols.size(); ++b)
          block(Eigen::Index(a), Eigen::Index(b)) = r(cols[a], cols[b]);
      }
      q.cronbach_alpha = standardized_alpha(block);
      q.composite_reliability = composite_reliability(lambda);
      q.ave = average_variance_extracted(lambda);
    }
    q.alpha_ok = q.cronbach_alpha >= 0.7;
    q.cr_ok = q.composite_reliability >= 0.7;
    q.ave_ok = q.ave >= 0.5;
    out.push_back(q);
  }
  return out;
}

double htmt(const Eigen::Ref<const Eigen::MatrixXd>& r, const std::vector<Eigen::Index>& a,
            const std::vector<Eigen::Index>& b) {
  double hetero = 0.0;
  for (auto i : a)
    for (auto k : b) hetero += std::abs(r(i, k));
  hetero /= double(a.size() * b.size());
  const Eigen::MatrixXd full = r;
  return hetero / std::sqrt(mean_off_diagonal_abs(full, a) * mean_off_diagonal_abs(full, b));
}

DiscriminantValidity discriminant_validity(const PathModel& model, const PathEstimates& estimates,
                                           const Eigen::Ref<const Eigen::MatrixXd>& data) {
  const Eigen::MatrixXd r = correlation_matrix(data, model.indicators(), "discriminant_validity");
  const auto J = model.construct_count();
  const auto quality = measurement_quality(model, estimates, data);
  DiscriminantValidity dv;
  dv.htmt = Eigen::MatrixXd::Identity(J, J);
  dv.fornell_larcker = estimates.construct_correlations;
  for (Eigen::Index a = 0; a < J; ++a) {
    for (Eigen::Index b = a + 1; b < J; ++b) {
      dv.htmt(a, b) = dv.htmt(b, a) = htmt(r, model.block_columns(a), model.block_columns(b));
    }
    dv.fornell_larcker(a, a) = std::sqrt(quality[std::size_t(a)].ave);
  }
  for (Eigen::Index a = 0; a < J; ++a) {
    double worst = 0.0;
    for (Eigen::Index b = 0; b < J; ++b)
      if (b != a) worst = std::max(worst, std::abs(estimates.construct_correlations(a, b)));
    dv.fornell_larcker_ok.push_back(dv.fornell_larcker(a, a) > worst);
  }
  return dv;
}

Eigen::VectorXd variance_inflation(const Eigen::Ref<const Eigen::MatrixXd>& predictors) {
  const Eigen::Index k = predictors.cols();
  Eigen::VectorXd vif = Eigen::VectorXd::Ones(k);
  if (k < 2) return vif;
  Eigen::MatrixXd centered = predictors.rowwise() - predictors.colwise().mean();
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::MatrixXd others(centered.rows(), k - 1);
    for (Eigen::Index o = 0, col = 0; o < k; ++o)
      if (o != c) others.col(col++) = centered.col(o);
    const Eigen::VectorXd target = centered.col(c);
    const Eigen::VectorXd b = others.colPivHouseholderQr().solve(target);
    const double sst = target.squaredNorm();
    const double r2 = sst > 0.0 ? 1.0 - (target - others * b).squaredNorm() / sst : 1.0;
    vif(c) = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
  }
  return vif;
}

std::vector<VifEntry> structural_collinearity(const PathModel& model,
                                              const PathEstimates& estimates) {
  std::vector<VifEntry> out;
  for (Eigen::Index j = 0; j < model.construct_count(); ++j) {
    const auto& preds = model.predecessors(j);
    if (preds.empty()) continue;
    const Eigen::VectorXd vif = variance_inflation(columns_of(estimates.scores, preds));
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const double v = vif(Eigen::Index(k));
      out.push_back({model.constructs()[std::size_t(j)], model.constructs()[std::size_t(preds[k])],
                     v, std::isinf(v)});
    }
  }
  return out;
}

// ---------------------------------------------------------------- inference

BootstrapResult bootstrap_paths(const PathModel& model,
                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                const PlsConfig& config) {
  if (config.bootstrap < 500)
    throw pls_error(ErrorKind::Parameter, "bootstrap_paths", "at least 500 resamples are required");
  const PathEstimates original = fit_pls(model, data, config);
  const Eigen::Index n = data.rows();
  const auto E = Eigen::Index(model.edges().size());
  const auto B = std::size_t(config.bootstrap);
  Eigen::MatrixXd draws(Eigen::Index(B), E);
  std::vector<int> attempts(B, 0);

  parallel_for(B, config.threads, [&](std::size_t b) {
    Eigen::MatrixXd sample(n, data.cols());
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000)
        throw pls_error(ErrorKind::Degenerate, "bootstrap_paths",
                        "resample " + std::to_string(b) + " stayed degenerate after 1000 draws");
      StreamRng rng(config.seed, b, std::uint64_t(attempt));
      for (Eigen::Index i = 0; i < n; ++i)
        sample.row(i) = data.row(Eigen::Index(rng.below(std::uint64_t(n))));
      try {
        const auto est = fit_pls(model, sample, config, &original);
        draws.row(Eigen::Index(b)) = est.paths.transpose();
        attempts[b] = attempt;
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Degenerate && e.kind() != ErrorKind::Rank &&
            e.kind() != ErrorKind::Convergence)
          throw;
      }
    }
  });

  BootstrapResult out;
  out.resamples = config.bootstrap;
  out.seed = config.seed;
  for (int a : attempts) out.redrawn += a;
  const double dof = double(B - 1);
  for (Eigen::Index e = 0; e < E; ++e) {
    BootstrapEdge edge;
    edge.relation = model.edge_label(std::size_t(e));
    edge.beta = original.paths(e);
    const Eigen::VectorXd col = draws.col(e);
    edge.mean = col.mean();
    edge.standard_error = sample_sd(col);
    edge.t = edge.standard_error > 0.0 ? edge.beta / edge.standard_error
                                       : std::numeric_limits<double>::infinity();
    edge.p_value = two_tailed_t_p(edge.t, dof);
    edge.ci_low = quantile(col, 0.025);
    edge.ci_high = quantile(col, 0.975);
    edge.r_squared = original.r_squared(model.edges()[std::size_t(e)].second);
    out.edges.push_back(edge);
  }
  return out;
}

std::vector<Q2Entry> blindfold_q2(const PathModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& data,
                                  const PlsConfig& config) {
  const Eigen::Index n = data.rows();
  const int D = config.omission_distance;
  if (D < 2)
    throw pls_error(ErrorKind::Parameter, "blindfold_q2", "omission distance must be >= 2");
  if (n % D == 0)
    throw pls_error(ErrorKind::Parameter, "blindfold_q2",
                    "omission distance " + std::to_string(D) + " divides n = " +
                        std::to_string(n) + "; use " + std::to_string(D - 1) + " or " +
                        std::to_string(D + 1));
  const auto S = standardize_data(data, model.indicators(), "blindfold_q2");
  const PathEstimates full = fit_pls(model, S.z, config);

  std::vector<Q2Entry> out;
  for (Eigen::Index j = 0; j < model.construct_count(); ++j) {
    if (!model.endogenous(j)) continue;
    const auto& cols = model.block_columns(j);
    const auto K = Eigen::Index(cols.size());
    Q2Entry entry;
    entry.construct = model.constructs()[std::size_t(j)];
    for (int round = 0; round < D; ++round) {
      Eigen::MatrixXd masked = S.z;
      std::vector<std::pair<Eigen::Index, Eigen::Index>> omitted;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < K; ++k)
          if ((i * K + k) % D == round) {
            masked(i, cols[std::size_t(k)]) = 0.0;  // mean of the standardized column
            omitted.emplace_back(i, cols[std::size_t(k)]);
          }
      const PathEstimates est = fit_pls(model, masked, config, &full);
      // Composite-level redundancy: predict the block's score from its
      // predecessors' scores, then each omitted indicator through its loading.
      const Eigen::MatrixXd P = columns_of(est.scores, model.predecessors(j));
      const Eigen::VectorXd b = P.colPivHouseholderQr().solve(Eigen::VectorXd(est.scores.col(j)));
      const Eigen::VectorXd predicted = P * b;
      for (const auto& [i, c] : omitted) {
        const double x_hat = est.column_mean(c) + est.column_sd(c) * est.loadings(c) * predicted(i);
        const double x = S.z(i, c);
        entry.sse += (x - x_hat) * (x - x_hat);
        entry.sso += x * x;
      }
    }
    entry.q2 = 1.0 - entry.sse / entry.sso;
    entry.predictive_relevance = entry.q2 > 0.0;
    out.push_back(entry);
  }
  return out;
}

// ---------------------------------------------------------------- assembly

PooledData pool_panel(const PathModel& model, const PanelDataset& panel, std::optional<int> year) {
  std::vector<Eigen::Index> cols;
  for (const auto& ind : model.indicators()) cols.push_back(panel.indicator_index(ind));
  std::vector<Eigen::Index> years;
  if (year) years.push_back(panel.year_index(*year));
  else
    for (std::size_t y = 0; y < panel.years().size(); ++y) years.push_back(Eigen::Index(y));

  PooledData out;
  std::vector<Eigen::RowVectorXd> rows;
  for (Eigen::Index r = 0; r < panel.region_count(); ++r) {
    for (auto y : years) {
      Eigen::RowVectorXd row(Eigen::Index(cols.size()));
      bool complete = true;
      for (std::size_t k = 0; k < cols.size() && complete; ++k) {
        const auto v = panel.value(r, cols[k], y);
        if (v) row(Eigen::Index(k)) = *v;
        else complete = false;
      }
      if (!complete) {
        ++out.dropped;
        continue;
      }
      rows.push_back(row);
      out.row_labels.push_back(panel.regions()[std::size_t(r)].code + ":" +
                               std::to_string(panel.years()[std::size_t(y)]));
    }
  }
  out.matrix.resize(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.matrix.row(Eigen::Index(i)) = rows[i];
  return out;
}

PlsReport run_pls(const PathModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data,
                  const PlsConfig& config) {
  PlsReport report;
  report.consistent = config.consistent;
  report.estimates = fit_pls(model, data, config);
  report.quality = measurement_quality(model, report.estimates, data);
  report.discriminant = discriminant_validity(model, report.estimates, data);
  report.vif = structural_collinearity(model, report.estimates);
  report.q2 = blindfold_q2(model, data, config);
  report.bootstrap = bootstrap_paths(model, data, config);
  return report;
}

nlohmann::json to_json(const PathModel& model, const PlsReport& report) {
  const auto& est = report.estimates;
  const auto J = model.construct_count();
  nlohmann::json loadings = nlohmann::json::array();
  for (Eigen::Index j = 0; j < J; ++j)
    for (auto c : model.block_columns(j))
      loadings.push_back({{"construct", model.constructs()[std::size_t(j)]},
                          {"indicator", model.indicators()[std::size_t(c)]},
                          {"loading", est.loadings(c)},
                          {"factor_loading", est.factor_loadings(c)},
                          {"weight", est.outer_weights(c)}});

  nlohmann::json rho_a = nlohmann::json::array();
  for (Eigen::Index j = 0; j < J; ++j)
    rho_a.push_back({{"code", model.constructs()[std::size_t(j)]}, {"rho_a", est.rho_a(j)}});

  nlohmann::json alpha = nlohmann::json::array(), ave = nlohmann::json::array(),
                 cr = nlohmann::json::array();
  for (const auto& q : report.quality) {
    alpha.push_back({{"code", q.construct}, {"cronbach_alpha", q.cronbach_alpha}, {"ok", q.alpha_ok}});
    ave.push_back({{"code", q.construct}, {"ave", q.ave}, {"ok", q.ave_ok}});
    cr.push_back({{"code", q.construct},
                  {"composite_reliability", q.composite_reliability},
                  {"ok", q.cr_ok}});
  }

  nlohmann::json vif = nlohmann::json::array();
  for (const auto& v : report.vif)
    vif.push_back({{"relation", v.predictor + "--" + v.endogenous},
                   {"vif", v.overflow ? nlohmann::json("inf") : nlohmann::json(v.vif)},
                   {"overflow", v.overflow},
                   {"exceeds_5", v.overflow || v.vif > 5.0}});

  nlohmann::json htmt_rows = nlohmann::json::array();
  for (Eigen::Index a = 1; a < J; ++a) {
    std::vector<double> vals;
    for (Eigen::Index b = 0; b < a; ++b) vals.push_back(report.discriminant.htmt(a, b));
    htmt_rows.push_back({{"construct", model.constructs()[std::size_t(a)]}, {"values", vals}});
  }
  std::vector<std::string> htmt_cols(model.constructs().begin(), model.constructs().end() - 1);

  nlohmann::json fl = nlohmann::json::array();
  for (Eigen::Index a = 0; a < J; ++a) {
    std::vector<double> row;
    for (Eigen::Index b = 0; b < J; ++b) row.push_back(report.discriminant.fornell_larcker(a, b));
    fl.push_back({{"construct", model.constructs()[std::size_t(a)]},
                  {"values", row},
                  {"ok", bool(report.discriminant.fornell_larcker_ok[std::size_t(a)])}});
  }

  nlohmann::json q2 = nlohmann::json::array();
  for (const auto& q : report.q2)
    q2.push_back({{"code", q.construct},
                  {"q2", q.q2},
                  {"sse", q.sse},
                  {"sso", q.sso},
                  {"predictive_relevance", q.predictive_relevance}});

  nlohmann::json paths = nlohmann::json::array();
  for (const auto& e : report.bootstrap.edges)
    paths.push_back({{"relation", e.relation},
                     {"beta", e.beta},
                     {"t", e.t},
                     {"r_squared", e.r_squared},
                     {"p", e.p_value},
                     {"supported", e.p_value < 0.05},
                     {"bootstrap_mean", e.mean},
                     {"standard_error", e.standard_error},
                     {"ci_2_5", e.ci_low},
                     {"ci_97_5", e.ci_high}});

  return {{"model", model.to_json()},
          {"n_observations", est.scores.rows()},
          {"iterations", est.iterations},
          {"estimator", report.consistent ? "consistent" : "classic"},
          {"rho_a", rho_a},
          {"outer_loadings", loadings},
          {"internal_consistency", alpha},
          {"average_variance_extracted", ave},
          {"composite_reliability", cr},
          {"collinearity", vif},
          {"htmt", {{"columns", htmt_cols}, {"rows", htmt_rows}}},
          {"fornell_larcker", {{"columns", model.constructs()}, {"rows", fl}}},
          {"q2", q2},
          {"paths", paths},
          {"bootstrap",
           {{"resamples", report.bootstrap.resamples},
            {"redrawn", report.bootstrap.redrawn},
            {"seed", report.bootstrap.seed},
            {"dof", report.bootstrap.resamples - 1}}}};
}

}  // namespace spatialecon::pls
