#pragma once
/**
 * @file linsolve.hpp
 * @brief Sparse direct factorizations, the normal-equation solvers used by
 *        the ADMM subproblems, and the solve-count ledger.
 *
 * Accounting unit: one "PDE solution" is one triangular solve pair against a
 * factorization for one source column. Factorizations are counted apart.
 */

#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "lwi/common.hpp"

namespace lwi {

enum class SizeClass { full, background, target };

inline const char* to_string(SizeClass c) {
  switch (c) {
    case SizeClass::full: return "full";
    case SizeClass::background: return "background";
    case SizeClass::target: return "target";
  }
  return "?";
}

/// Monotone, thread-safe solve counters keyed by (phase, frequency, size class).
class SolveLedger {
 public:
  using Key = std::tuple<std::string, double, SizeClass>;

  void record_solves(const std::string& phase, double freq_hz, SizeClass size, long count) {
    std::lock_guard lock(mu_);
    solves_[{phase, freq_hz, size}] += count;
  }
  void record_factorization(const std::string& phase, double freq_hz, SizeClass size) {
    std::lock_guard lock(mu_);
    factorizations_[{phase, freq_hz, size}] += 1;
  }

  long solves(SizeClass size) const {
    std::lock_guard lock(mu_);
    long total = 0;
    for (const auto& [k, v] : solves_)
      if (std::get<2>(k) == size) total += v;
    return total;
  }
  long solves(const std::string& phase, SizeClass size) const {
    std::lock_guard lock(mu_);
    long total = 0;
    for (const auto& [k, v] : solves_)
      if (std::get<0>(k) == phase && std::get<2>(k) == size) total += v;
    return total;
  }
  long solves(const std::string& phase, double freq_hz, SizeClass size) const {
    std::lock_guard lock(mu_);
    auto it = solves_.find({phase, freq_hz, size});
    return it == solves_.end() ? 0 : it->second;
  }
  long total_solves() const {
    std::lock_guard lock(mu_);
    long total = 0;
    for (const auto& [k, v] : solves_) total += v;
    return total;
  }
  long total_factorizations() const {
    std::lock_guard lock(mu_);
    long total = 0;
    for (const auto& [k, v] : factorizations_) total += v;
    return total;
  }

  std::map<Key, long> entries() const {
    std::lock_guard lock(mu_);
    return solves_;
  }

  /// CSV with columns phase,frequency_hz,size_class,count (solves only).
  std::string to_csv() const {
    std::lock_guard lock(mu_);
    std::ostringstream os;
    os.precision(17);
    os << "phase,frequency_hz,size_class,count\n";
    for (const auto& [k, v] : solves_)
      os << std::get<0>(k) << ',' << std::get<1>(k) << ',' << to_string(std::get<2>(k)) << ',' << v << '\n';
    return os.str();
  }

  void merge_from(const SolveLedger& other) {
    auto s = other.entries();
    std::map<Key, long> f;
    {
      std::lock_guard lock(other.mu_);
      f = other.factorizations_;
    }
    std::lock_guard lock(mu_);
    for (const auto& [k, v] : s) solves_[k] += v;
    for (const auto& [k, v] : f) factorizations_[k] += v;
  }

 private:
  mutable std::mutex mu_;
  std::map<Key, long> solves_;
  std::map<Key, long> factorizations_;
};

/// Where a solve is charged. A null ledger disables accounting.
struct LedgerTag {
  SolveLedger* ledger = nullptr;
  std::string phase = "unlabeled";
  double freq_hz = 0.0;
};

/// Reusable factorization of a square sparse complex matrix.
class Factorization {
 public:
  enum class Kind { lu, hermitian };

  Factorization(const SpMat& M, Kind kind, SizeClass size) : kind_(kind), size_(size), n_(M.rows()) {
    require_shape(M.rows() == M.cols(), "factorize: matrix is not square");
    if (kind == Kind::lu) {
      auto lu = std::make_shared<LU>();
      lu->analyzePattern(M);
      lu->factorize(M);
      if (lu->info() != Eigen::Success) throw FactorizationError("LU factorization failed: " + lu->lastErrorMessage(), parse_pivot(lu->lastErrorMessage()));
      solver_ = std::move(lu);
    } else {
      auto ldlt = std::make_shared<LDLT>();
      ldlt->compute(M);
      if (ldlt->info() != Eigen::Success) throw FactorizationError("LDLT factorization failed: zero pivot", -1);
      const Eigen::VectorXd d = ldlt->vectorD().real();
      const double dmax = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
      for (Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 1e-14 * dmax) || !std::isfinite(d[i]))
          throw FactorizationError("Hermitian factorization hit a non-positive pivot at " + std::to_string(i), i);
      }
      solver_ = std::move(ldlt);
    }
  }

  Kind kind() const { return kind_; }
  SizeClass size_class() const { return size_; }
  Index rows() const { return n_; }

  /// Solves for every column of rhs; charges rhs.cols() solves to the tag.
  CMat solve(const CMat& rhs, const LedgerTag& tag = {}) const {
    require_shape(rhs.rows() == n_, "solve: rhs rows do not match factorization");
    CMat x(n_, rhs.cols());
    // Column by column so batched and single-source results agree bitwise.
    std::visit([&](const auto& s) {
      for (Index j = 0; j < rhs.cols(); ++j) x.col(j) = s->solve(rhs.col(j));
    }, solver_);
    if (tag.ledger) tag.ledger->record_solves(tag.phase, tag.freq_hz, size_, static_cast<long>(rhs.cols()));
    if (!x.allFinite()) throw SolverError("solve produced non-finite values");
    return x;
  }

 private:
  using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;
  using LDLT = Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>;

  static Index parse_pivot(const std::string& msg) {
    const auto pos = msg.find_last_of(' ');
    if (pos == std::string::npos) return -1;
    try {
      return static_cast<Index>(std::stol(msg.substr(pos + 1)));
    } catch (...) {
      return -1;
    }
  }

  Kind kind_;
  SizeClass size_;
  Index n_;
  std::variant<std::shared_ptr<LU>, std::shared_ptr<LDLT>> solver_;
};

inline Factorization factorize(const SpMat& M, SizeClass size = SizeClass::full, const LedgerTag& tag = {},
                               Factorization::Kind kind = Factorization::Kind::lu) {
  Factorization f(M, kind, size);
  if (tag.ledger) tag.ledger->record_factorization(tag.phase, tag.freq_hz, size);
  return f;
}

/**
 * Minimizes ||Q X - rhs_data||_F^2 + lambda ||M X - rhs_wave||_F^2 through the
 * Hermitian normal equations (lambda M^H M + Q^H Q) X = lambda M^H rhs_wave +
 * Q^H rhs_data. Q may have zero rows.
 */
inline CMat solve_block_normal(const SpMat& M, const SpMat& Q, double lambda, const CMat& rhs_wave,
                               const CMat& rhs_data, SizeClass size, const LedgerTag& tag = {}) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw SolverError("penalty lambda must be positive");
  require_shape(Q.cols() == M.cols(), "normal solve: observation columns do not match operator");
  require_shape(rhs_wave.rows() == M.rows(), "normal solve: wave rhs rows mismatch");
  require_shape(rhs_data.rows() == Q.rows(), "normal solve: data rhs rows mismatch");
  require_shape(rhs_data.cols() == rhs_wave.cols() || Q.rows() == 0, "normal solve: source counts differ");
  const SpMat Mh = M.adjoint();
  SpMat normal = lambda * (Mh * M);
  CMat rhs = lambda * (Mh * rhs_wave);
  if (Q.rows() > 0) {
    const SpMat Qh = Q.adjoint();
    normal += Qh * Q;
    rhs += Qh * rhs_data;
  }
  normal.makeCompressed();
  const Factorization f = factorize(normal, size, tag, Factorization::Kind::hermitian);
  return f.solve(rhs, tag);
}

/// [lambda A^H A + P^H P] U = lambda A^H rhs_wave + P^H rhs_data.
inline CMat solve_augmented_normal(const SpMat& A, const SpMat& P, double lambda, const CMat& rhs_wave,
                                   const CMat& rhs_data, const LedgerTag& tag = {}) {
  return solve_block_normal(A, P, lambda, rhs_wave, rhs_data, SizeClass::full, tag);
}

/// Least-squares U2 = [A2^H A2]^{-1} A2^H rhs (an N2 x N2 system).
inline CMat solve_target_normal(const SpMat& A2, const CMat& rhs, const LedgerTag& tag = {}) {
  require_shape(rhs.rows() == A2.rows(), "target solve: rhs rows mismatch");
  const SpMat none(0, A2.cols());
  try {
    return solve_block_normal(A2, none, 1.0, rhs, CMat(0, rhs.cols()), SizeClass::target, tag);
  } catch (const FactorizationError& e) {
    throw FactorizationError(std::string("target block is rank deficient: ") + e.what(), e.pivot());
  }
}

}  // namespace lwi
