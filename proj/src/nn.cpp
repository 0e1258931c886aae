#include "rare/nn.hpp"

namespace rare {

void Linear::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, in_dim())));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias[i] = dist(rng);
}

}  // namespace rare
