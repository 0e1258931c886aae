#include "rare/object_encoder.hpp"

#include <algorithm>
#include <sstream>

#include "rare/error.hpp"

namespace rare {

CbamParams::CbamParams(int channels, int reduction, int kernel)
    : mlp_in(channels, std::max(1, channels / std::max(1, reduction))),
      mlp_out(std::max(1, channels / std::max(1, reduction)), channels),
      conv_weight(Vec::Zero(2 * kernel * kernel)),
      conv_bias(Vec::Zero(1)),
      kernel(kernel) {}

void CbamParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  mlp_in.visit(p + ".mlp_in", f);
  mlp_out.visit(p + ".mlp_out", f);
  f(p + ".conv.weight", as_span(conv_weight));
  f(p + ".conv.bias", as_span(conv_bias));
}

void CbamParams::init(std::mt19937_64& rng) {
  mlp_in.init(rng);
  mlp_out.init(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(conv_weight.size()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < conv_weight.size(); ++i) conv_weight[i] = dist(rng);
  conv_bias.setZero();
}

namespace {

// 2-channel k x k convolution with zero padding on a size x size grid.
Vec spatial_conv(const Vec& mean, const Vec& max, int size, const CbamParams& p) {
  const int k = p.kernel, pad = k / 2;
  Vec out = Vec::Constant(size * size, p.conv_bias[0]);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < k; ++ky) {
        const int yy = y + ky - pad;
        if (yy < 0 || yy >= size) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = x + kx - pad;
          if (xx < 0 || xx >= size) continue;
          const int src = yy * size + xx;
          acc += p.conv_weight[ky * k + kx] * mean[src] + p.conv_weight[k * k + ky * k + kx] * max[src];
        }
      }
      out[y * size + x] += acc;
    }
  }
  return out;
}

Vec mlp(const CbamParams& p, const Vec& v, Vec* hidden_pre) {
  Vec h = p.mlp_in.forward(v);
  if (hidden_pre) *hidden_pre = h;
  return p.mlp_out.forward(relu(h));
}

// Backward of mlp(v); returns dL/dv.
Vec mlp_backward(const CbamParams& p, const Vec& v, const Vec& hidden_pre, const Vec& dout,
                 CbamParams& g) {
  Vec dh = p.mlp_out.backward(relu(hidden_pre), dout, g.mlp_out);
  dh = dh.cwiseProduct((hidden_pre.array() > 0.0).cast<double>().matrix());
  return p.mlp_in.backward(v, dh, g.mlp_in);
}

}  // namespace

Mat cbam(const Mat& x, int size, const CbamParams& params, CbamCache* cache) {
  if (x.rows() != params.channels() || x.cols() != static_cast<Eigen::Index>(size) * size) {
    std::ostringstream os;
    os << "cbam expects " << params.channels() << " x " << size * size << " input, got "
       << x.rows() << " x " << x.cols();
    throw Error(ErrorCode::kInvalidShape, os.str());
  }
  const Eigen::Index channels = x.rows(), cells = x.cols();

  Vec avg = x.rowwise().mean();
  Vec max(channels);
  Eigen::VectorXi max_idx(channels);
  for (Eigen::Index c = 0; c < channels; ++c) {
    Eigen::Index j;
    max[c] = x.row(c).maxCoeff(&j);
    max_idx[c] = static_cast<int>(j);
  }
  Vec hidden_avg, hidden_max;
  const Vec channel_gate = sigmoid(Vec(mlp(params, avg, &hidden_avg) + mlp(params, max, &hidden_max)));
  Mat x1 = channel_gate.asDiagonal() * x;

  Vec smean = x1.colwise().mean().transpose();
  Vec smax(cells);
  Eigen::VectorXi smax_idx(cells);
  for (Eigen::Index j = 0; j < cells; ++j) {
    Eigen::Index c;
    smax[j] = x1.col(j).maxCoeff(&c);
    smax_idx[j] = static_cast<int>(c);
  }
  const Vec spatial_gate = sigmoid(spatial_conv(smean, smax, size, params));
  Mat y = x1 * spatial_gate.asDiagonal();

  if (cache) {
    cache->size = size;
    cache->x = x;
    cache->avg = std::move(avg);
    cache->max = std::move(max);
    cache->max_idx = std::move(max_idx);
    cache->hidden_avg = std::move(hidden_avg);
    cache->hidden_max = std::move(hidden_max);
    cache->channel_gate = channel_gate;
    cache->x1 = std::move(x1);
    cache->spatial_mean = std::move(smean);
    cache->spatial_max = std::move(smax);
    cache->spatial_max_idx = std::move(smax_idx);
    cache->spatial_gate = spatial_gate;
  }
  return y;
}

Mat cbam_backward(const CbamCache& cache, const Mat& dy, const CbamParams& params,
                  CbamParams& grad) {
  const int size = cache.size, k = params.kernel, pad = k / 2;
  const Eigen::Index channels = cache.x.rows(), cells = cache.x.cols();

  // spatial gate
  Mat dx1 = dy * cache.spatial_gate.asDiagonal();
  const Vec dgate = dy.cwiseProduct(cache.x1).colwise().sum().transpose();
  const Vec dpre = dgate.cwiseProduct(
      cache.spatial_gate.cwiseProduct(Vec::Ones(cells) - cache.spatial_gate));
  Vec dmean = Vec::Zero(cells), dmax = Vec::Zero(cells);
  grad.conv_bias[0] += dpre.sum();
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d = dpre[y * size + x];
      for (int ky = 0; ky < k; ++ky) {
        const int yy = y + ky - pad;
        if (yy < 0 || yy >= size) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = x + kx - pad;
          if (xx < 0 || xx >= size) continue;
          const int src = yy * size + xx;
          grad.conv_weight[ky * k + kx] += d * cache.spatial_mean[src];
          grad.conv_weight[k * k + ky * k + kx] += d * cache.spatial_max[src];
          dmean[src] += d * params.conv_weight[ky * k + kx];
          dmax[src] += d * params.conv_weight[k * k + ky * k + kx];
        }
      }
    }
  }
  dx1.rowwise() += (dmean / static_cast<double>(channels)).transpose();
  for (Eigen::Index j = 0; j < cells; ++j) dx1(cache.spatial_max_idx[j], j) += dmax[j];

  // channel gate
  Mat dx = cache.channel_gate.asDiagonal() * dx1;
  const Vec dcgate = dx1.cwiseProduct(cache.x).rowwise().sum();
  const Vec dcpre = dcgate.cwiseProduct(
      cache.channel_gate.cwiseProduct(Vec::Ones(channels) - cache.channel_gate));
  const Vec davg = mlp_backward(params, cache.avg, cache.hidden_avg, dcpre, grad);
  const Vec dmaxc = mlp_backward(params, cache.max, cache.hidden_max, dcpre, grad);
  dx.colwise() += davg / static_cast<double>(cells);
  for (Eigen::Index c = 0; c < channels; ++c) dx(c, cache.max_idx[c]) += dmaxc[c];
  return dx;
}

EmbedParams::EmbedParams(int channels, int reduction, int box_embed_dim, int object_dim)
    : cbam(channels, reduction),
      box(4, box_embed_dim),
      fc1(channels + box_embed_dim, object_dim),
      fc2(object_dim, object_dim) {}

void EmbedParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  cbam.visit(p + ".cbam", f);
  box.visit(p + ".box", f);
  fc1.visit(p + ".fc1", f);
  fc2.visit(p + ".fc2", f);
}

void EmbedParams::init(std::mt19937_64& rng) {
  cbam.init(rng);
  box.init(rng);
  fc1.init(rng);
  fc2.init(rng);
}

RoIPatch concat_patches(std::span<const RoIPatch> patches, std::span<const int> expected_scales) {
  if (patches.empty()) throw Error(ErrorCode::kInvalidInput, "no object patches to concatenate");
  std::vector<int> got;
  for (const auto& p : patches) got.insert(got.end(), p.source_scales.begin(), p.source_scales.end());
  if (!std::equal(got.begin(), got.end(), expected_scales.begin(), expected_scales.end())) {
    throw Error(ErrorCode::kInvalidInput, "object patches do not cover every configured scale");
  }
  RoIPatch out;
  out.size = patches.front().size;
  out.source_scales = std::move(got);
  Eigen::Index rows = 0;
  for (const auto& p : patches) {
    if (p.size != out.size) throw Error(ErrorCode::kInvalidInput, "patch sizes differ across scales");
    rows += p.values.rows();
  }
  out.values.resize(rows, static_cast<Eigen::Index>(out.size) * out.size);
  Eigen::Index r = 0;
  for (const auto& p : patches) {
    out.values.middleRows(r, p.values.rows()) = p.values;
    r += p.values.rows();
  }
  return out;
}

ObjectEmbedding embed_object(const RoIPatch& patch, const BoundingBox& box, double frame_width,
                             double frame_height, const EmbedParams& params, EmbedCache* cache) {
  if (!box.valid()) throw Error(ErrorCode::kInvalidInput, "embed_object needs a valid box");
  CbamCache* cc = cache ? &cache->cbam : nullptr;
  const Mat refined = cbam(patch.values, patch.size, params.cbam, cc);
  Vec pooled = refined.rowwise().mean();

  ObjectEmbedding out;
  out.box_norm = {box.x1 / frame_width, box.y1 / frame_height, box.x2 / frame_width,
                  box.y2 / frame_height};
  Vec box_norm = Eigen::Map<const Vec>(out.box_norm.data(), 4);
  Vec box_embed = params.box.forward(box_norm);
  Vec joint(pooled.size() + box_embed.size());
  joint << pooled, box_embed;
  Vec hidden_pre = params.fc1.forward(joint);
  out.values = params.fc2.forward(relu(hidden_pre));

  if (cache) {
    cache->pooled = std::move(pooled);
    cache->box_norm = std::move(box_norm);
    cache->box_embed = std::move(box_embed);
    cache->joint = std::move(joint);
    cache->hidden_pre = std::move(hidden_pre);
  }
  return out;
}

void embed_object_backward(const EmbedCache& cache, const Vec& dembed, const EmbedParams& params,
                           EmbedParams& grad, Mat* dpatch) {
  Vec dh = params.fc2.backward(relu(cache.hidden_pre), dembed, grad.fc2);
  dh = dh.cwiseProduct((cache.hidden_pre.array() > 0.0).cast<double>().matrix());
  const Vec djoint = params.fc1.backward(cache.joint, dh, grad.fc1);
  const Eigen::Index channels = cache.pooled.size();
  params.box.backward(cache.box_norm, djoint.tail(djoint.size() - channels), grad.box);
  const Eigen::Index cells = cache.cbam.x.cols();
  const Mat drefined = (djoint.head(channels) / static_cast<double>(cells)).replicate(1, cells);
  Mat dx = cbam_backward(cache.cbam, drefined, params.cbam, grad.cbam);
  if (dpatch) *dpatch = std::move(dx);
}

}  // namespace rare
