#include "bytegan/ad/adam.hpp"

#include <cmath>

namespace bytegan::ad {

void AdamState::step(ParamSet& params, const std::map<std::string, std::vector<double>>& grads) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const std::vector<double>& g = git->second;
    std::vector<double>& p = params.values(name);
    if (g.size() != p.size()) fail(Errc::ShapeMismatch, "gradient size mismatch for " + name);
    std::vector<double>& m = m_[name];
    std::vector<double>& v = v_[name];
    if (m.empty()) m.assign(p.size(), 0.0);
    if (v.empty()) v.assign(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      p[i] -= cfg_.alpha * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
}

}  // namespace bytegan::ad
