#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gavatar {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

using Index = std::uint32_t;

inline constexpr double kPi = std::numbers::pi;

enum class ErrorKind {
  DegenerateFace,
  NearSingular,
  ParallelBisectors,
  DegenerateAxis,
  DimensionMismatch,
  NoForwardCache,
  UnassignedFace,
  ShapeMismatch,
  EmptyPart,
  TooFewParts,
  AlreadyRan,
  EmptySet,
  NonFiniteLoss,
  BadCheckpoint,
  BadFile,
  BadConfig,
  SampledAtKink,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Regularization sets: every mesh face lands in exactly one.
enum class FaceSet : std::uint8_t { Rigid = 0, Flexible = 1, Mouth = 2 };

inline const char* face_set_name(FaceSet s) {
  switch (s) {
    case FaceSet::Rigid: return "RIGID";
    case FaceSet::Flexible: return "FLEXIBLE";
    case FaceSet::Mouth: return "MOUTH";
  }
  return "?";
}

}  // namespace gavatar
