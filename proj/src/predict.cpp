#include "grips/predict.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grips {

Link parse_link(const std::string& name) {
  if (name == "identity") return Link::identity;
  if (name == "log") return Link::log;
  if (name == "logit") return Link::logit;
  throw ConfigError("model.link", "unknown link '" + name + "'");
}

std::string link_name(Link link) {
  switch (link) {
  case Link::identity: return "identity";
  case Link::log: return "log";
  case Link::logit: return "logit";
  }
  return "identity";
}

double apply_link(Link link, double x) {
  switch (link) {
  case Link::identity: return x;
  case Link::log: return std::log(x);
  case Link::logit: return std::log(x / (1.0 - x));
  }
  return x;
}

double inverse_link(Link link, double x) {
  switch (link) {
  case Link::identity: return x;
  case Link::log: return std::exp(x);
  case Link::logit: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = level * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

// mean and quantiles of each column of a draws x locations sample matrix
void summarize(const Eigen::MatrixXf& s, Eigen::Index col, const std::vector<double>& levels,
               Mat& mean, std::vector<Mat>& quants) {
  const int n = static_cast<int>(s.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(s.rows());
    double acc = 0.0;
    for (Eigen::Index t = 0; t < s.rows(); ++t) {
      v[t] = s(t, i);
      acc += v[t];
    }
    mean(i, col) = acc / static_cast<double>(s.rows());
    std::sort(v.begin(), v.end());
    for (std::size_t l = 0; l < levels.size(); ++l) quants[l](i, col) = quantile(v, levels[l]);
  }
}

} // namespace

PredictionSummary predict(const ChainStore& chain, const PredictionRequest& req,
                          const Mesh& mesh, std::uint64_t seed) {
  if (chain.empty()) throw std::invalid_argument("predict: empty chain");
  const Eigen::Index n = req.locations.rows();
  const Eigen::Index q = chain.q;
  if (req.X.rows() != n || req.X.cols() != chain.p)
    throw std::invalid_argument("predict: covariates missing for some locations");
  if (!req.X.allFinite()) throw std::invalid_argument("predict: covariates must be finite");
  std::vector<int> outcomes = req.outcomes;
  if (outcomes.empty())
    for (int j = 0; j < q; ++j) outcomes.push_back(j);
  for (int j : outcomes)
    if (j < 0 || j >= q) throw std::invalid_argument("predict: unknown outcome index");
  if (!req.links.empty() && static_cast<Eigen::Index>(req.links.size()) != q)
    throw std::invalid_argument("predict: need one link per outcome");
  for (const auto& d : chain.draws)
    if (d.r.rows() != static_cast<Eigen::Index>(mesh.grid.size()))
      throw std::invalid_argument("predict: chain does not store the latent field");

  std::vector<int> node(n), coincident(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point loc = req.locations.row(i).transpose();
    node[i] = locate_node(mesh, loc);
    coincident[i] = coincident_point(mesh, node[i], loc);
  }

  const Eigen::Index T = static_cast<Eigen::Index>(chain.size());
  const Eigen::Index nout = static_cast<Eigen::Index>(outcomes.size());
  std::vector<Eigen::MatrixXf> samples(nout, Eigen::MatrixXf(T, n));
  const Eigen::Index k = chain.k;
  Mat acc = Mat::Zero(n, nout);

  for (Eigen::Index t = 0; t < T; ++t) {
    const ChainDraw& d = chain.draws[t];
    const OwnCovarianceCache own(mesh, d.factors);
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t), Stream::predict);
    const Mat z = Eigen::Map<const Mat>(rng.normal(n * q).data(), n, q);
    const Mat xb = req.X * d.beta;
    std::exception_ptr err;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(n); ++i) {
      try {
        const Point loc = req.locations.row(i).transpose();
        const auto& pts = mesh.dag.own_points[node[i]];
        Vec u(k), rv(k);
        Vec h;
        for (Eigen::Index j = 0; j < k; ++j) {
          kriging_weights(mesh, node[i], coincident[i], loc, d.factors[j], own.get(j, node[i]), h,
                          rv[j]);
          double acc = 0.0;
          for (std::size_t s = 0; s < pts.size(); ++s) acc += h[s] * d.r(pts[s], j);
          u[j] = acc;
        }
        const Vec mean = xb.row(i).transpose() + d.A * u;
        Vec y(q);
        if (q == 1) {
          y[0] = mean[0] + std::sqrt(d.tau2[0] + d.A.row(0).cwiseAbs2().dot(rv)) * z(i, 0);
        } else {
          Mat cov = d.A * rv.asDiagonal() * d.A.transpose();
          cov.diagonal() += d.tau2;
          Eigen::LLT<Mat> llt(cov);
          if (llt.info() != Eigen::Success)
            throw NumericalError("predictive covariance is singular");
          y = mean + llt.matrixL() * z.row(i).transpose();
        }
        for (Eigen::Index o = 0; o < nout; ++o) {
          const int j = outcomes[o];
          const Link link = req.links.empty() ? Link::identity : req.links[j];
          const double v = inverse_link(link, y[j]);
          samples[o](t, i) = static_cast<float>(v);
          acc(i, o) += v;
        }
      } catch (...) {
#pragma omp critical(grips_predict_error)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  }

  PredictionSummary out;
  out.locations = req.locations;
  out.outcomes = outcomes;
  out.levels = req.levels;
  out.mean = Mat::Zero(n, nout);
  out.quantiles.assign(req.levels.size(), Mat::Zero(n, nout));
  for (Eigen::Index o = 0; o < nout; ++o)
    summarize(samples[o], o, req.levels, out.mean, out.quantiles);
  out.mean = acc / static_cast<double>(T);
  if (req.keep_samples) out.samples = std::move(samples);
  return out;
}

LatentMap latent_map(const ChainStore& chain, const Mesh& mesh,
                     const std::vector<double>& levels) {
  if (chain.empty()) throw std::invalid_argument("latent_map: empty chain");
  const Eigen::Index ns = static_cast<Eigen::Index>(mesh.grid.size());
  const Eigen::Index T = static_cast<Eigen::Index>(chain.size());
  LatentMap out;
  out.levels = levels;
  out.mean = Mat::Zero(ns, chain.q);
  out.quantiles.assign(levels.size(), Mat::Zero(ns, chain.q));
  for (Eigen::Index j = 0; j < chain.q; ++j) {
    Eigen::MatrixXf s(T, ns);
    Vec acc = Vec::Zero(ns);
    for (Eigen::Index t = 0; t < T; ++t) {
      const ChainDraw& d = chain.draws[t];
      if (d.r.rows() != ns)
        throw std::invalid_argument("latent_map: chain does not store the latent field");
      const Vec w = d.r * d.A.row(j).transpose();
      acc += w;
      s.row(t) = w.transpose().cast<float>();
    }
    summarize(s, j, levels, out.mean, out.quantiles);
    out.mean.col(j) = acc / static_cast<double>(T);
  }
  return out;
}

} // namespace grips
