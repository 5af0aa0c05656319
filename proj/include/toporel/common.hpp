#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace toporel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One sample per row, one latent dimension per column.
using LatentBatch = Matrix;

using Rng = std::mt19937_64;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TOPOREL_ERROR_TYPE(Name) \
  struct Name : Error {          \
    using Error::Error;          \
  }

TOPOREL_ERROR_TYPE(DimensionMismatch);
TOPOREL_ERROR_TYPE(ZeroVector);
TOPOREL_ERROR_TYPE(DegenerateBatch);
TOPOREL_ERROR_TYPE(NonPositiveEpsilon);
TOPOREL_ERROR_TYPE(TooFewPoints);
TOPOREL_ERROR_TYPE(ClassTooSmall);
TOPOREL_ERROR_TYPE(DegenerateEdge);
TOPOREL_ERROR_TYPE(NonMonotoneTable);
TOPOREL_ERROR_TYPE(SingularSigmaIdentity);
TOPOREL_ERROR_TYPE(MembershipViolation);
TOPOREL_ERROR_TYPE(ArchitectureMismatch);
TOPOREL_ERROR_TYPE(BadArchitecture);
TOPOREL_ERROR_TYPE(LabelOutOfRange);
TOPOREL_ERROR_TYPE(CacheMismatch);
TOPOREL_ERROR_TYPE(BadPeriod);
TOPOREL_ERROR_TYPE(EmptyDataset);
TOPOREL_ERROR_TYPE(SubBatchTooSmall);
TOPOREL_ERROR_TYPE(BadConfig);
TOPOREL_ERROR_TYPE(NotEnoughSamples);
TOPOREL_ERROR_TYPE(ModeMismatch);
TOPOREL_ERROR_TYPE(AnchorCountMismatch);
TOPOREL_ERROR_TYPE(LengthMismatch);
TOPOREL_ERROR_TYPE(NumericalFailure);
TOPOREL_ERROR_TYPE(IoError);
TOPOREL_ERROR_TYPE(ConfigError);

#undef TOPOREL_ERROR_TYPE

// splitmix64 step; derives independent stream seeds from one root seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace toporel
