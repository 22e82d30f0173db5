#include "regrasp/sampling.hpp"

#include <cmath>
#include <random>

#include "regrasp/error.hpp"

namespace regrasp
{

namespace
{

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

double radical_inverse(std::uint64_t index, int base)
{
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0)
  {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

std::vector<Eigen::VectorXd> halton_points(std::size_t count, int dims, std::uint64_t seed)
{
  if (dims <= 0 || dims > static_cast<int>(std::size(kPrimes)))
    throw Error(ErrorCode::InvalidArgument, "Halton dimension out of range");
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(dims);
  if (seed != 0)
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int d = 0; d < dims; ++d)
      shift[d] = uni(rng);
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
  {
    Eigen::VectorXd p(dims);
    for (int d = 0; d < dims; ++d)
    {
      const double v = radical_inverse(i + 1, kPrimes[d]) + shift[d];
      p[d] = v - std::floor(v);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace regrasp
