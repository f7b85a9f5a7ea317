// SPDX-License-Identifier: Apache-2.0
#include "vmfev/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "vmfev/error.hpp"

namespace vmfev {
namespace {

constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kEmptyMass = 1e-8;

// Per-component constant log w_j - 0.5 sum_d log(2 pi var_jd).
Eigen::VectorXd component_constants(const GmmModel& m) {
  Eigen::VectorXd c(m.k());
  for (int j = 0; j < m.k(); ++j) {
    c[j] = std::log(m.weights[j]) -
           0.5 * (m.dim() * kLog2Pi + m.variances.row(j).array().log().sum());
  }
  return c;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

// Row-wise component log-likelihoods log w_j + log N(x_i; j).
void component_log_probs(const GmmModel& m, const Eigen::MatrixXd& data,
                         Eigen::MatrixXd& out) {
  const Eigen::VectorXd c = component_constants(m);
  out.resize(data.rows(), m.k());
  for (int j = 0; j < m.k(); ++j) {
    const Eigen::RowVectorXd mean = m.means.row(j);
    const Eigen::RowVectorXd inv_var = m.variances.row(j).cwiseInverse();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double q = ((data.row(i) - mean).array().square() * inv_var.array()).sum();
      out(i, j) = c[j] - 0.5 * q;
    }
  }
}

Eigen::RowVectorXd column_variance(const Eigen::MatrixXd& data) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::RowVectorXd var = (data.rowwise() - mean).array().square().colwise().mean();
  return var.cwiseMax(kVarianceFloor);
}

GmmModel kmeanspp_init(const Eigen::MatrixXd& data, int k, RandomStream& rng) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  std::vector<Eigen::Index> centers;
  centers.push_back(static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n)));
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    const Eigen::RowVectorXd last = data.row(centers.back());
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (data.row(i) - last).squaredNorm());
    }
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
    }
    centers.push_back(pick);
  }

  // One hard assignment pass to set weights and variances.
  std::vector<int> label(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      const double dist = (data.row(i) - data.row(centers[j])).squaredNorm();
      if (dist < best) {
        best = dist;
        label[i] = j;
      }
    }
  }
  const Eigen::RowVectorXd global_var = column_variance(data);
  GmmModel m;
  m.weights = Eigen::VectorXd::Zero(k);
  m.means = Eigen::MatrixXd::Zero(k, d);
  m.variances = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.weights[label[i]] += 1.0;
    m.means.row(label[i]) += data.row(i);
  }
  for (int j = 0; j < k; ++j) {
    if (m.weights[j] > 0.0) {
      m.means.row(j) /= m.weights[j];
    } else {
      m.means.row(j) = data.row(centers[j]);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    m.variances.row(label[i]) += (data.row(i) - m.means.row(label[i])).array().square().matrix();
  }
  for (int j = 0; j < k; ++j) {
    if (m.weights[j] >= 2.0) {
      m.variances.row(j) = (m.variances.row(j) / m.weights[j]).cwiseMax(kVarianceFloor);
    } else {
      m.variances.row(j) = global_var;
    }
    m.weights[j] = std::max(m.weights[j], 1.0);
  }
  m.weights /= m.weights.sum();
  return m;
}

}  // namespace

void GmmModel::validate() const {
  if (weights.size() == 0 || means.rows() != weights.size() ||
      variances.rows() != weights.size() || variances.cols() != means.cols() ||
      means.cols() == 0) {
    throw DataError("GmmModel: inconsistent shapes");
  }
  if (!weights.allFinite() || !means.allFinite() || !variances.allFinite()) {
    throw DataError("GmmModel: non-finite parameter");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw DataError("GmmModel: weights must lie on the simplex");
  }
  if ((variances.array() < kVarianceFloor).any()) {
    throw DataError("GmmModel: variance below floor");
  }
}

GmmFit fit_em(const Eigen::MatrixXd& data, const GmmFitOptions& opts, RandomStream& rng) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (opts.k < 1) throw DataError("fit_em: k must be >= 1");
  if (n < opts.k) {
    throw DataError("fit_em: need at least k = " + std::to_string(opts.k) + " rows, got " +
                    std::to_string(n));
  }
  if (d < 1) throw DataError("fit_em: feature dimension must be >= 1");
  if (!data.allFinite()) throw DataError("fit_em: non-finite feature value");

  GmmFit fit;
  fit.model = kmeanspp_init(data, opts.k, rng);
  GmmModel& m = fit.model;
  const Eigen::RowVectorXd global_var = column_variance(data);

  Eigen::MatrixXd logp;
  Eigen::VectorXd ll(n);
  Eigen::MatrixXd resp(n, opts.k);
  for (int iter = 0;; ++iter) {
    // E-step
    component_log_probs(m, data, logp);
    for (Eigen::Index i = 0; i < n; ++i) {
      ll[i] = log_sum_exp(logp.row(i).transpose());
      resp.row(i) = (logp.row(i).array() - ll[i]).exp();
    }
    const double mean_ll = ll.mean();
    fit.log_likelihood.push_back(mean_ll);
    if (iter > 0) {
      const double prev = fit.log_likelihood[fit.log_likelihood.size() - 2];
      if (mean_ll - prev < opts.tol) {
        fit.converged = true;
        break;
      }
    }
    if (iter >= opts.max_iters) break;

    // M-step
    Eigen::VectorXd mass = resp.colwise().sum().transpose();
    std::vector<bool> taken(n, false);
    std::vector<bool> reseeded(opts.k, false);
    for (int j = 0; j < opts.k; ++j) {
      if (mass[j] >= kEmptyMass) continue;
      reseeded[j] = true;
      // Re-seed at the worst-fit datum not already claimed this iteration.
      Eigen::Index worst = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[i] && (worst < 0 || ll[i] < ll[worst])) worst = i;
      }
      taken[worst] = true;
      resp.col(j).setZero();
      resp(worst, j) = 1.0;
      mass[j] = 1.0;
      fit.reseeds.push_back("iteration " + std::to_string(iter) + ": component " +
                            std::to_string(j) + " re-seeded at row " +
                            std::to_string(worst));
    }
    m.weights = mass / mass.sum();
    m.means = (resp.transpose() * data).array().colwise() / mass.array();
    for (int j = 0; j < opts.k; ++j) {
      if (reseeded[j]) {
        m.variances.row(j) = global_var;
        continue;
      }
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
      for (Eigen::Index i = 0; i < n; ++i) {
        var += resp(i, j) * (data.row(i) - m.means.row(j)).array().square().matrix();
      }
      m.variances.row(j) = (var / mass[j]).cwiseMax(kVarianceFloor);
    }
  }
  return fit;
}

double log_density(const GmmModel& model, std::span<const double> z) {
  if (static_cast<int>(z.size()) != model.dim()) {
    throw DataError("log_density: feature dimension " + std::to_string(z.size()) +
                    " does not match model dimension " + std::to_string(model.dim()));
  }
  const Eigen::VectorXd c = component_constants(model);
  const Eigen::Map<const Eigen::RowVectorXd> row(z.data(), static_cast<Eigen::Index>(z.size()));
  Eigen::VectorXd lp(model.k());
  for (int j = 0; j < model.k(); ++j) {
    lp[j] = c[j] - 0.5 * ((row - model.means.row(j)).array().square() /
                          model.variances.row(j).array())
                             .sum();
  }
  return log_sum_exp(lp);
}

double log_density(const GmmModel& model, const Eigen::VectorXd& z) {
  return log_density(model, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

double log_density_per_dim(const GmmModel& model, const Eigen::VectorXd& z) {
  return log_density(model, z) / static_cast<double>(model.dim());
}

std::string gmm_to_json(const GmmModel& model) {
  nlohmann::json j;
  j["k"] = model.k();
  j["dim"] = model.dim();
  j["weights"] = std::vector<double>(model.weights.data(), model.weights.data() + model.k());
  auto rows = [](const Eigen::MatrixXd& mat) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(mat.cols()));
      for (Eigen::Index c = 0; c < mat.cols(); ++c) row[static_cast<std::size_t>(c)] = mat(r, c);
      out.push_back(row);
    }
    return out;
  };
  j["means"] = rows(model.means);
  j["variances"] = rows(model.variances);
  return j.dump();
}

GmmModel gmm_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("gmm_from_json: ") + e.what());
  }
  try {
    const int k = j.at("k").get<int>();
    const int dim = j.at("dim").get<int>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto means = j.at("means").get<std::vector<std::vector<double>>>();
    const auto vars = j.at("variances").get<std::vector<std::vector<double>>>();
    if (k < 1 || dim < 1 || static_cast<int>(w.size()) != k ||
        static_cast<int>(means.size()) != k || static_cast<int>(vars.size()) != k) {
      throw DataError("gmm_from_json: sizes do not match k");
    }
    GmmModel m;
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), k);
    m.means.resize(k, dim);
    m.variances.resize(k, dim);
    for (int r = 0; r < k; ++r) {
      if (static_cast<int>(means[r].size()) != dim || static_cast<int>(vars[r].size()) != dim) {
        throw DataError("gmm_from_json: row length does not match dim");
      }
      for (int c = 0; c < dim; ++c) {
        m.means(r, c) = means[r][c];
        m.variances(r, c) = vars[r][c];
      }
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("gmm_from_json: ") + e.what());
  }
}

}  // namespace vmfev
