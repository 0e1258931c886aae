#include "rare/fusion.hpp"

#include <cmath>
#include <sstream>

#include "rare/error.hpp"

namespace rare {

MhaParams::MhaParams(int scene_dim, int object_dim, int fused_dim, int heads, bool residual)
    : query(scene_dim, fused_dim),
      key(object_dim, fused_dim),
      value(object_dim, fused_dim),
      out(fused_dim, fused_dim),
      empty(scene_dim, fused_dim),
      heads(heads),
      residual(residual) {
  if (heads <= 0 || fused_dim % heads != 0) {
    throw Error(ErrorCode::kInvalidConfig, "fused_dim must be divisible by num_heads");
  }
}

void MhaParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  query.visit(p + ".query", f);
  key.visit(p + ".key", f);
  value.visit(p + ".value", f);
  out.visit(p + ".out", f);
  empty.visit(p + ".empty", f);
}

void MhaParams::init(std::mt19937_64& rng) {
  query.init(rng);
  key.init(rng);
  value.init(rng);
  out.init(rng);
  empty.init(rng);
}

FusionOutput fuse(const SceneState& scene, std::span<const ObjectEmbedding> objects,
                  const MhaParams& params, FusionCache* cache) {
  if (objects.empty()) {
    throw Error(ErrorCode::kEmptyObjectSet, "fuse needs at least one object; use fuse_empty");
  }
  if (scene.hidden.size() != params.query.in_dim()) {
    throw Error(ErrorCode::kInvalidShape, "scene state does not match the query projection");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(objects.size());
  Mat obj(params.key.in_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (objects[i].values.size() != params.key.in_dim()) {
      std::ostringstream os;
      os << "object embedding " << i << " has dimension " << objects[i].values.size()
         << ", expected " << params.key.in_dim();
      throw Error(ErrorCode::kInvalidShape, os.str());
    }
    obj.col(i) = objects[i].values;
  }

  const int heads = params.heads;
  const int dh = params.fused_dim() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Vec q = params.query.forward(scene.hidden);
  Mat keys = (params.key.weight * obj).colwise() + params.key.bias;
  Mat values = (params.value.weight * obj).colwise() + params.value.bias;

  Mat attention(heads, n);
  Vec context(params.fused_dim());
  for (int h = 0; h < heads; ++h) {
    Vec logits = keys.middleRows(h * dh, dh).transpose() * q.segment(h * dh, dh) * scale;
    const double m = logits.maxCoeff();
    Vec e = (logits.array() - m).exp().matrix();
    e /= e.sum();
    attention.row(h) = e.transpose();
    context.segment(h * dh, dh) = values.middleRows(h * dh, dh) * e;
  }

  FusionOutput result;
  result.fused = params.out.forward(context);
  if (params.residual) result.fused += q;
  result.scores = attention.colwise().mean().transpose();

  if (cache) {
    cache->empty = false;
    cache->scene = scene.hidden;
    cache->objects = std::move(obj);
    cache->query = std::move(q);
    cache->keys = std::move(keys);
    cache->values = std::move(values);
    cache->attention = std::move(attention);
    cache->context = std::move(context);
  }
  return result;
}

FusionOutput fuse_empty(const SceneState& scene, const MhaParams& params, FusionCache* cache) {
  if (scene.hidden.size() != params.empty.in_dim()) {
    throw Error(ErrorCode::kInvalidShape, "scene state does not match the empty projection");
  }
  FusionOutput result;
  result.fused = params.empty.forward(scene.hidden);
  if (cache) {
    *cache = FusionCache{};
    cache->empty = true;
    cache->scene = scene.hidden;
  }
  return result;
}

Vec fuse_backward(const FusionCache& c, const Vec& dfused, const Vec& dscores,
                  const MhaParams& params, MhaParams& grad, Mat* dobjects) {
  if (c.empty) {
    if (dobjects) dobjects->resize(params.key.in_dim(), 0);
    return params.empty.backward(c.scene, dfused, grad.empty);
  }
  const int heads = params.heads;
  const int dh = params.fused_dim() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Eigen::Index n = c.objects.cols();

  const Vec dcontext = params.out.backward(c.context, dfused, grad.out);
  Vec dq = params.residual ? Vec(dfused) : Vec(Vec::Zero(dfused.size()));
  Mat dkeys = Mat::Zero(c.keys.rows(), n);
  Mat dvalues = Mat::Zero(c.values.rows(), n);

  for (int h = 0; h < heads; ++h) {
    const Vec a = c.attention.row(h).transpose();
    const auto dctx_h = dcontext.segment(h * dh, dh);
    dvalues.middleRows(h * dh, dh).noalias() += dctx_h * a.transpose();
    Vec da = c.values.middleRows(h * dh, dh).transpose() * dctx_h;
    if (dscores.size() == n) da += dscores / static_cast<double>(heads);
    const Vec dlogits = a.cwiseProduct((da.array() - a.dot(da)).matrix()) * scale;
    dq.segment(h * dh, dh).noalias() += c.keys.middleRows(h * dh, dh) * dlogits;
    dkeys.middleRows(h * dh, dh).noalias() += c.query.segment(h * dh, dh) * dlogits.transpose();
  }

  grad.key.weight.noalias() += dkeys * c.objects.transpose();
  grad.key.bias += dkeys.rowwise().sum();
  grad.value.weight.noalias() += dvalues * c.objects.transpose();
  grad.value.bias += dvalues.rowwise().sum();
  if (dobjects) {
    *dobjects = params.key.weight.transpose() * dkeys + params.value.weight.transpose() * dvalues;
  }
  return params.query.backward(c.scene, dq, grad.query);
}

}  // namespace rare
