#include "ensf_da/forward_models.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ensf_da/error.hpp"
#include "ensf_da/parallel.hpp"

namespace ensf_da {
namespace {

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

Eigen::VectorXd euler_maruyama(const Eigen::VectorXd& x, const Eigen::VectorXd& drift,
                               const SdePredictConfig& cfg, Engine& rng) {
  if (drift.size() != x.size()) throw ModelError("drift changed the state dimension");
  Eigen::VectorXd next = x + drift * cfg.delta_k;
  if (cfg.sigma_sde > 0.0) {
    const double scale = std::sqrt(cfg.delta_k) * cfg.sigma_sde;
    StandardNormal normal;
    for (Eigen::Index j = 0; j < next.size(); ++j) next[j] += scale * normal(rng);
  }
  return next;
}

}  // namespace

Eigen::VectorXd linear_model_step(const Eigen::Ref<const Eigen::VectorXd>& x) { return 2.0 * x; }

void SdePredictConfig::validate() const {
  if (!(delta_k > 0.0) || !std::isfinite(delta_k)) throw std::invalid_argument("delta_k must be positive");
  if (!(sigma_sde >= 0.0) || !std::isfinite(sigma_sde))
    throw std::invalid_argument("sigma_sde must be nonnegative");
}

Ensemble sde_predict(const Ensemble& prior, const Drift& drift, const SdePredictConfig& cfg,
                     std::uint64_t seed, unsigned threads) {
  cfg.validate();
  Eigen::MatrixXd out(prior.dim(), prior.size());
  parallel_for(static_cast<std::size_t>(prior.size()), threads, [&](std::size_t i) {
    const auto member = static_cast<Eigen::Index>(i);
    Engine rng = substream(seed, StreamTag::predict, {i});
    const Eigen::VectorXd x = prior.member(member);
    Eigen::VectorXd next;
    try {
      next = euler_maruyama(x, drift(x), cfg, rng);
    } catch (const std::exception& e) {
      throw ModelError("member " + std::to_string(i) + ": " + e.what());
    }
    if (!next.allFinite()) throw ModelError("member " + std::to_string(i) + ": non-finite prediction");
    out.col(member) = next;
  });
  return Ensemble(std::move(out));
}

SdeModel::SdeModel(std::string name, Drift drift, SdePredictConfig cfg)
    : name_(std::move(name)), drift_(std::move(drift)), cfg_(cfg) {
  cfg_.validate();
}

Eigen::VectorXd SdeModel::step(const Eigen::VectorXd& state, std::size_t, Engine& rng) const {
  return euler_maruyama(state, drift_(state), cfg_, rng);
}

ModelDescriptor SdeModel::descriptor() const {
  return {name_, {{"delta_k", fmt_double(cfg_.delta_k)}, {"sigma_sde", fmt_double(cfg_.sigma_sde)}}};
}

AdditiveNoiseModel::AdditiveNoiseModel(std::shared_ptr<const ForwardModel> inner, SdePredictConfig cfg)
    : inner_(std::move(inner)), cfg_(cfg) {
  if (!inner_) throw std::invalid_argument("AdditiveNoiseModel needs an inner model");
  cfg_.validate();
}

Eigen::VectorXd AdditiveNoiseModel::step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const {
  Eigen::VectorXd next = inner_->step(state, k, rng);
  if (cfg_.sigma_sde > 0.0) {
    const double scale = std::sqrt(cfg_.delta_k) * cfg_.sigma_sde;
    StandardNormal normal;
    for (Eigen::Index j = 0; j < next.size(); ++j) next[j] += scale * normal(rng);
  }
  return next;
}

ModelDescriptor AdditiveNoiseModel::descriptor() const {
  ModelDescriptor d = inner_->descriptor();
  d.name += "+noise";
  d.parameters["delta_k"] = fmt_double(cfg_.delta_k);
  d.parameters["sigma_sde"] = fmt_double(cfg_.sigma_sde);
  return d;
}

Perimeter synthetic_perimeter_step(const Perimeter& p, const SyntheticFireParams& params, Engine& rng) {
  if (!(params.growth >= 0.0)) throw std::invalid_argument("growth must be nonnegative");
  if (!(params.jitter >= 0.0 && params.jitter <= 1.0))
    throw std::invalid_argument("jitter must lie in [0, 1]");
  if (!(params.split_threshold > 0.0)) throw std::invalid_argument("split_threshold must be positive");

  const Vertex c = p.centroid();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vertex> moved;
  moved.reserve(p.size());
  for (const Vertex& v : p.vertices()) {
    const double u = unit(rng);
    const double dx = v.lon - c.lon;
    const double dy = v.lat - c.lat;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) {
      moved.push_back(v);
      continue;
    }
    const double push = params.growth * (1.0 + params.jitter * u) / r;
    moved.push_back({v.lon + dx * push, v.lat + dy * push});
  }

  std::vector<Vertex> out;
  out.reserve(2 * moved.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const Vertex& a = moved[i];
    const Vertex& b = moved[(i + 1) % moved.size()];
    out.push_back(a);
    if (std::hypot(b.lon - a.lon, b.lat - a.lat) > params.split_threshold)
      out.push_back({0.5 * (a.lon + b.lon), 0.5 * (a.lat + b.lat)});
  }
  return Perimeter(std::move(out));
}

SyntheticFireModel::SyntheticFireModel(SyntheticFireParams params) : params_(params) {
  if (!(params_.split_threshold > 0.0)) throw std::invalid_argument("split_threshold must be positive");
}

SyntheticFireModel SyntheticFireModel::for_initial(const Perimeter& initial, double growth, double jitter) {
  return SyntheticFireModel({growth, jitter, 2.0 * initial.length() / static_cast<double>(initial.size())});
}

Eigen::VectorXd SyntheticFireModel::step(const Eigen::VectorXd& state, std::size_t, Engine& rng) const {
  try {
    return flatten(synthetic_perimeter_step(unflatten(state), params_, rng));
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("synthetic fire model: ") + e.what());
  }
}

ModelDescriptor SyntheticFireModel::descriptor() const {
  return {"synthetic-fire",
          {{"growth", fmt_double(params_.growth)},
           {"jitter", fmt_double(params_.jitter)},
           {"split_threshold", fmt_double(params_.split_threshold)}}};
}

}  // namespace ensf_da
