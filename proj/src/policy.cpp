#include "semsat/policy.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace semsat {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

VecX masked_log_probs(const VecX& logits, std::uint32_t mask) {
  const int n = static_cast<int>(logits.size());
  double mx = kNegInf;
  bool any = false;
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1u) {
      any = true;
      mx = std::max(mx, logits[i]);
    }
  }
  if (!any) {
    throw FullyMaskedHead("no legal value under the action mask");
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1u) {
      sum += std::exp(logits[i] - mx);
    }
  }
  const double log_z = mx + std::log(sum);
  VecX lp(n);
  for (int i = 0; i < n; ++i) {
    lp[i] = ((mask >> i) & 1u) ? logits[i] - log_z : kNegInf;
  }
  return lp;
}

int sample_masked(const VecX& logits, std::uint32_t mask, RandomSource& rng, double* logp_out) {
  const VecX lp = masked_log_probs(logits, mask);
  const int n = static_cast<int>(lp.size());
  const double u = rng.uniform();
  double cum = 0.0;
  int last_legal = -1;
  for (int i = 0; i < n; ++i) {
    if (((mask >> i) & 1u) == 0u) {
      continue;
    }
    last_legal = i;
    cum += std::exp(lp[i]);
    if (u < cum) {
      if (logp_out != nullptr) {
        *logp_out = lp[i];
      }
      return i;
    }
  }
  if (logp_out != nullptr) {
    *logp_out = lp[last_legal];
  }
  return last_legal;  // rounding tail
}

MlpPolicy::MlpPolicy(const PolicyConfig& cfg, RandomSource& rng) : cfg_(cfg) {
  build_layout();
  params_ = VecX::Zero(param_count_);
  for (std::size_t k = 0; k < layer_in_.size(); ++k) {
    const int in = layer_in_[k];
    const int out = layer_out_[k];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::Map<MatX> w(params_.data() + w_off_[k], out, in);
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) {
        w(r, c) = scale * rng.gauss();
      }
    }
    // biases start at zero
  }
  Eigen::Map<VecX> b_last(params_.data() + b_off_.back(), layer_out_.back());
  for (const HeadBias& hb : cfg_.init_bias) {
    if (hb.head < 0 || hb.head >= num_heads() || hb.value < 0 ||
        hb.value >= cfg_.head_dims[hb.head]) {
      throw BadConfig("initial head bias indexes outside the output layout");
    }
    b_last[head_off_[hb.head] + hb.value] += hb.logit;
  }
}

void MlpPolicy::build_layout() {
  if (cfg_.state_dim <= 0 || cfg_.head_dims.empty()) {
    throw BadConfig("policy needs a state dimension and at least one head");
  }
  head_off_.clear();
  int rows = 0;
  for (int d : cfg_.head_dims) {
    if (d < 1 || d > 32) {
      throw BadConfig("head dimensions must lie in [1, 32]");
    }
    head_off_.push_back(rows);
    rows += d;
  }
  output_dim_ = rows + (cfg_.value_head ? 1 : 0);

  layer_in_.clear();
  layer_out_.clear();
  int in = cfg_.state_dim;
  for (int h : cfg_.hidden) {
    if (h < 1) {
      throw BadConfig("hidden widths must be positive");
    }
    layer_in_.push_back(in);
    layer_out_.push_back(h);
    in = h;
  }
  layer_in_.push_back(in);
  layer_out_.push_back(output_dim_);

  w_off_.clear();
  b_off_.clear();
  int off = 0;
  for (std::size_t k = 0; k < layer_in_.size(); ++k) {
    w_off_.push_back(off);
    off += layer_out_[k] * layer_in_[k];
    b_off_.push_back(off);
    off += layer_out_[k];
  }
  param_count_ = off;
}

int MlpPolicy::value_row() const {
  if (!cfg_.value_head) {
    throw Error("policy has no value head");
  }
  return output_dim_ - 1;
}

void MlpPolicy::forward(const MatX& states, Cache& cache) const {
  cache.input = states;
  cache.act.assign(layer_in_.size() - 1, MatX());
  MatX x = states;
  for (std::size_t k = 0; k < layer_in_.size(); ++k) {
    Eigen::Map<const MatX> w(params_.data() + w_off_[k], layer_out_[k], layer_in_[k]);
    Eigen::Map<const VecX> b(params_.data() + b_off_[k], layer_out_[k]);
    MatX z = (w * x).colwise() + b;
    if (k + 1 < layer_in_.size()) {
      cache.act[k] = z.array().tanh().matrix();
      x = cache.act[k];
    } else {
      cache.out = std::move(z);
    }
  }
}

void MlpPolicy::backward(const Cache& cache, const MatX& dout, VecX& grad) const {
  if (grad.size() != param_count_) {
    grad = VecX::Zero(param_count_);
  }
  MatX delta = dout;
  for (int k = static_cast<int>(layer_in_.size()) - 1; k >= 0; --k) {
    const MatX& x = k == 0 ? cache.input : cache.act[k - 1];
    Eigen::Map<MatX> dw(grad.data() + w_off_[k], layer_out_[k], layer_in_[k]);
    Eigen::Map<VecX> db(grad.data() + b_off_[k], layer_out_[k]);
    dw.noalias() += delta * x.transpose();
    db += delta.rowwise().sum();
    if (k > 0) {
      Eigen::Map<const MatX> w(params_.data() + w_off_[k], layer_out_[k], layer_in_[k]);
      delta = (w.transpose() * delta).cwiseProduct(
          (1.0 - cache.act[k - 1].array().square()).matrix());
    }
  }
}

VecX MlpPolicy::logits_for(const VecX& state) const {
  Cache cache;
  forward(state, cache);
  return cache.out.col(0);
}

double MlpPolicy::value_for(const VecX& state) const {
  return logits_for(state)[value_row()];
}

std::string MlpPolicy::serialize() const {
  nlohmann::json j;
  j["state_dim"] = cfg_.state_dim;
  j["head_dims"] = cfg_.head_dims;
  j["hidden"] = cfg_.hidden;
  j["value_head"] = cfg_.value_head;
  std::vector<double> p(params_.data(), params_.data() + params_.size());
  j["params"] = p;
  return j.dump();
}

MlpPolicy MlpPolicy::deserialize(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MlpPolicy pol;
  pol.cfg_.state_dim = j.at("state_dim").get<int>();
  pol.cfg_.head_dims = j.at("head_dims").get<std::vector<int>>();
  pol.cfg_.hidden = j.at("hidden").get<std::vector<int>>();
  pol.cfg_.value_head = j.at("value_head").get<bool>();
  pol.build_layout();
  const std::vector<double> p = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(p.size()) != pol.param_count_) {
    throw BadConfig("checkpoint parameter count does not match the layout");
  }
  pol.params_ = Eigen::Map<const VecX>(p.data(), p.size());
  return pol;
}

}  // namespace semsat
