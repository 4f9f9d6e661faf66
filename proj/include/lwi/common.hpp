#pragma once
/**
 * @file common.hpp
 * @brief Scalar/array aliases and the error hierarchy shared by every module.
 */

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lwi {

using cplx = std::complex<double>;
using Index = Eigen::Index;

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
/// Multi-source field set: one column per source.
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;
using IndexList = std::vector<Index>;

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DegeneratePartitionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a sparse solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public SolverError {
 public:
  FactorizationError(const std::string& what, Index pivot)
      : SolverError(what), pivot_(pivot) {}
  /// Column where the factorization broke down, or -1 when unknown.
  Index pivot() const { return pivot_; }

 private:
  Index pivot_;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace lwi
