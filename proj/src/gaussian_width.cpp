#include "chainmean/gaussian_width.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "chainmean/rng.hpp"

namespace chainmean {

namespace {

constexpr std::size_t kBatch = 256;

void fill_maxima(const Matrix& directions, const Matrix& root, std::uint64_t seed,
                 std::size_t worker, std::span<double> out) {
  Rng rng = make_rng(seed, worker);
  std::normal_distribution<double> normal;
  const Eigen::Index d = root.rows();
  Matrix z(d, static_cast<Eigen::Index>(kBatch));
  for (std::size_t start = 0; start < out.size(); start += kBatch) {
    const auto b = static_cast<Eigen::Index>(std::min(kBatch, out.size() - start));
    for (Eigen::Index j = 0; j < b; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) z(i, j) = normal(rng);
    }
    const Matrix g = root * z.leftCols(b);
    const Matrix values = directions * g;
    for (Eigen::Index j = 0; j < b; ++j) out[start + static_cast<std::size_t>(j)] = values.col(j).maxCoeff();
  }
}

}  // namespace

WidthEstimate gaussian_sup(const FunctionClass& cls, const Matrix& covariance, std::size_t draws,
                           std::uint64_t seed, std::size_t workers) {
  if (!cls.is_linear()) {
    throw Error(ErrorCode::NotLinearClass, "gaussian width needs a Linear class");
  }
  if (draws < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 draws");
  workers = std::clamp<std::size_t>(workers, 1, draws);
  const Matrix& t = cls.directions();
  if (covariance.rows() != t.cols()) {
    throw Error(ErrorCode::NotSquare, "covariance must be d x d for the class dimension");
  }
  const Matrix root = psd_sqrt(covariance);

  std::vector<double> maxima(draws);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * draws / workers;
    const std::size_t end = (w + 1) * draws / workers;
    std::span<double> chunk(maxima.data() + begin, end - begin);
    if (workers == 1) {
      fill_maxima(t, root, seed, w, chunk);
    } else {
      pool.emplace_back(fill_maxima, std::cref(t), std::cref(root), seed, w, chunk);
    }
  }
  for (auto& th : pool) th.join();

  double sum = 0.0;
  for (const double m : maxima) sum += m;
  const double mean = sum / static_cast<double>(draws);
  double sq = 0.0;
  for (const double m : maxima) sq += (m - mean) * (m - mean);
  const double sd = std::sqrt(sq / static_cast<double>(draws - 1));
  return {mean, sd / std::sqrt(static_cast<double>(draws)), draws, seed, workers};
}

double critical_dimension(const WidthEstimate& width, double d_f) {
  if (!(d_f > 0.0)) throw Error(ErrorCode::ZeroDiameter, "d_F must be positive");
  const double r = width.mean / d_f;
  return r * r;
}

}  // namespace chainmean
