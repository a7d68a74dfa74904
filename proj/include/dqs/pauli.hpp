#pragma once

#include <string>
#include <vector>

#include "dqs/optics.hpp"

namespace dqs {

/// Tensor product of single-qubit Paulis, one character per qubit from
/// {I, X, Y, Z}. Character p acts on path p.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::string word);

  int n_qubits() const { return static_cast<int>(word_.size()); }
  const std::string& word() const { return word_; }
  bool commutes_with(const PauliString& other) const;

  /// out = P |in>.
  std::vector<Amplitude> apply(const std::vector<Amplitude>& in) const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::string word_;
};

/// H = sum_j h_j over mutually commuting Pauli strings (so h_j^2 = I).
class Hamiltonian {
 public:
  Hamiltonian(std::string tag, std::vector<PauliString> terms);

  static Hamiltonian sum_z(int n);
  static Hamiltonian sum_x(int n);
  static Hamiltonian xx_pairs(int n);
  /// "sumZ", "sumX" or "xxPairs".
  static Hamiltonian from_tag(const std::string& tag, int n);

  const std::string& tag() const { return tag_; }
  int n_qubits() const { return terms_.empty() ? 0 : terms_.front().n_qubits(); }
  const std::vector<PauliString>& terms() const { return terms_; }

  /// out = H |in>.
  std::vector<Amplitude> apply(const std::vector<Amplitude>& in) const;
  /// (lambda_max - lambda_min) / 2, rounded up: the degree of every response
  /// trigonometric polynomial under this generator.
  int response_degree() const;

 private:
  std::string tag_;
  std::vector<PauliString> terms_;
};

/// Measured Pauli observable; eigenvalues +-1.
class Observable {
 public:
  explicit Observable(PauliString p) : pauli_(std::move(p)) {}
  static Observable prod_x(int n) { return Observable(PauliString(std::string(static_cast<std::size_t>(n), 'X'))); }
  static Observable prod_z(int n) { return Observable(PauliString(std::string(static_cast<std::size_t>(n), 'Z'))); }
  /// "prodX", "prodZ", or an explicit Pauli word such as "XXZZ".
  static Observable from_tag(const std::string& tag, int n);

  const PauliString& pauli() const { return pauli_; }
  int n_qubits() const { return pauli_.n_qubits(); }

 private:
  PauliString pauli_;
};

}  // namespace dqs
