#include "rare/scene_encoder.hpp"

#include <sstream>

#include "rare/error.hpp"

namespace rare {

Vec pool_backbone(const FeatureMap& map) {
  map.validate();
  Vec out(map.channels);
  const double n = static_cast<double>(map.plane_size());
  for (int c = 0; c < map.channels; ++c) {
    double acc = 0.0;
    for (double v : map.plane(c)) acc += v;
    out[c] = acc / n;
  }
  return out;
}

GruParams::GruParams(int input_dim, int hidden_dim)
    : wz(Mat::Zero(hidden_dim, input_dim)),
      uz(Mat::Zero(hidden_dim, hidden_dim)),
      wr(Mat::Zero(hidden_dim, input_dim)),
      ur(Mat::Zero(hidden_dim, hidden_dim)),
      wh(Mat::Zero(hidden_dim, input_dim)),
      uh(Mat::Zero(hidden_dim, hidden_dim)),
      bz(Vec::Zero(hidden_dim)),
      br(Vec::Zero(hidden_dim)),
      bh(Vec::Zero(hidden_dim)) {}

void GruParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  f(p + ".wz", as_span(wz));
  f(p + ".uz", as_span(uz));
  f(p + ".bz", as_span(bz));
  f(p + ".wr", as_span(wr));
  f(p + ".ur", as_span(ur));
  f(p + ".br", as_span(br));
  f(p + ".wh", as_span(wh));
  f(p + ".uh", as_span(uh));
  f(p + ".bh", as_span(bh));
}

void GruParams::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  visit("", [&](std::string_view, std::span<double> v) {
    for (double& x : v) x = dist(rng);
  });
}

SceneState scene_step(const SceneState& state, const Vec& pooled, const GruParams& p,
                      GruCache* cache) {
  if (pooled.size() != p.input_dim() || state.hidden.size() != p.hidden_dim()) {
    std::ostringstream os;
    os << "scene_step expects input " << p.input_dim() << " and hidden " << p.hidden_dim()
       << ", got " << pooled.size() << " and " << state.hidden.size();
    throw Error(ErrorCode::kInvalidShape, os.str());
  }
  const Vec& h = state.hidden;
  const Vec z = sigmoid(Vec(p.wz * pooled + p.uz * h + p.bz));
  const Vec r = sigmoid(Vec(p.wr * pooled + p.ur * h + p.br));
  const Vec candidate = (p.wh * pooled + p.uh * r.cwiseProduct(h) + p.bh).array().tanh().matrix();
  SceneState next;
  next.hidden = (Vec::Ones(h.size()) - z).cwiseProduct(h) + z.cwiseProduct(candidate);
  next.frame_index = state.frame_index + 1;
  if (cache) {
    cache->x = pooled;
    cache->h = h;
    cache->z = z;
    cache->r = r;
    cache->candidate = candidate;
  }
  return next;
}

Vec scene_step_backward(const GruCache& c, const Vec& dh_next, const GruParams& p, GruParams& g,
                        Vec* dx) {
  const Vec ones = Vec::Ones(c.h.size());
  const Vec dz = dh_next.cwiseProduct(c.candidate - c.h);
  const Vec dcand = dh_next.cwiseProduct(c.z);
  Vec dh = dh_next.cwiseProduct(ones - c.z);

  const Vec da_h = dcand.cwiseProduct(ones - c.candidate.cwiseProduct(c.candidate));
  const Vec rh = c.r.cwiseProduct(c.h);
  g.wh.noalias() += da_h * c.x.transpose();
  g.uh.noalias() += da_h * rh.transpose();
  g.bh += da_h;
  const Vec drh = p.uh.transpose() * da_h;
  const Vec dr = drh.cwiseProduct(c.h);
  dh += drh.cwiseProduct(c.r);

  const Vec da_z = dz.cwiseProduct(c.z.cwiseProduct(ones - c.z));
  const Vec da_r = dr.cwiseProduct(c.r.cwiseProduct(ones - c.r));
  g.wz.noalias() += da_z * c.x.transpose();
  g.uz.noalias() += da_z * c.h.transpose();
  g.bz += da_z;
  g.wr.noalias() += da_r * c.x.transpose();
  g.ur.noalias() += da_r * c.h.transpose();
  g.br += da_r;
  dh.noalias() += p.uz.transpose() * da_z + p.ur.transpose() * da_r;

  if (dx) {
    *dx = p.wh.transpose() * da_h + p.wz.transpose() * da_z + p.wr.transpose() * da_r;
  }
  return dh;
}

}  // namespace rare
