#include "dqs/pauli.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace dqs {

PauliString::PauliString(std::string word) : word_(std::move(word)) {
  for (char c : word_)
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
      throw SetupError("Pauli word '" + word_ + "' contains '" + std::string(1, c) + "'");
}

bool PauliString::commutes_with(const PauliString& other) const {
  if (other.n_qubits() != n_qubits()) throw SetupError("Pauli words differ in length");
  int anti = 0;
  for (std::size_t i = 0; i < word_.size(); ++i)
    if (word_[i] != 'I' && other.word_[i] != 'I' && word_[i] != other.word_[i]) ++anti;
  return anti % 2 == 0;
}

std::vector<Amplitude> PauliString::apply(const std::vector<Amplitude>& in) const {
  const int n = n_qubits();
  if (in.size() != (std::size_t{1} << n)) throw SetupError("Pauli string dimension mismatch");
  std::size_t flip = 0;
  for (int p = 0; p < n; ++p) {
    const char c = word_[static_cast<std::size_t>(p)];
    if (c == 'X' || c == 'Y') flip |= std::size_t{1} << (n - 1 - p);
  }
  std::vector<Amplitude> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    Amplitude phase{1.0, 0.0};
    for (int p = 0; p < n; ++p) {
      const bool bit = (i >> (n - 1 - p)) & 1U;
      switch (word_[static_cast<std::size_t>(p)]) {
        case 'Y': phase *= bit ? Amplitude(0.0, -1.0) : Amplitude(0.0, 1.0); break;
        case 'Z': if (bit) phase = -phase; break;
        default: break;
      }
    }
    out[i ^ flip] = phase * in[i];
  }
  return out;
}

Hamiltonian::Hamiltonian(std::string tag, std::vector<PauliString> terms)
    : tag_(std::move(tag)), terms_(std::move(terms)) {
  if (terms_.empty()) throw SetupError("Hamiltonian needs at least one term");
  for (std::size_t i = 0; i < terms_.size(); ++i)
    for (std::size_t j = i + 1; j < terms_.size(); ++j)
      if (!terms_[i].commutes_with(terms_[j]))
        throw SetupError("Hamiltonian terms " + terms_[i].word() + " and " + terms_[j].word() + " do not commute");
}

namespace {

std::string single(int n, int p, char c) {
  std::string w(static_cast<std::size_t>(n), 'I');
  w[static_cast<std::size_t>(p)] = c;
  return w;
}

}  // namespace

Hamiltonian Hamiltonian::sum_z(int n) {
  std::vector<PauliString> t;
  for (int p = 0; p < n; ++p) t.emplace_back(single(n, p, 'Z'));
  return {"sumZ", std::move(t)};
}

Hamiltonian Hamiltonian::sum_x(int n) {
  std::vector<PauliString> t;
  for (int p = 0; p < n; ++p) t.emplace_back(single(n, p, 'X'));
  return {"sumX", std::move(t)};
}

Hamiltonian Hamiltonian::xx_pairs(int n) {
  std::vector<PauliString> t;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::string w(static_cast<std::size_t>(n), 'I');
      w[static_cast<std::size_t>(i)] = 'X';
      w[static_cast<std::size_t>(j)] = 'X';
      t.emplace_back(std::move(w));
    }
  return {"xxPairs", std::move(t)};
}

Hamiltonian Hamiltonian::from_tag(const std::string& tag, int n) {
  if (tag == "sumZ") return sum_z(n);
  if (tag == "sumX") return sum_x(n);
  if (tag == "xxPairs") return xx_pairs(n);
  throw SetupError("unknown Hamiltonian '" + tag + "'");
}

std::vector<Amplitude> Hamiltonian::apply(const std::vector<Amplitude>& in) const {
  std::vector<Amplitude> out(in.size());
  for (const auto& t : terms_) {
    const auto part = t.apply(in);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
  }
  return out;
}

int Hamiltonian::response_degree() const {
  const std::size_t dim = std::size_t{1} << n_qubits();
  Eigen::MatrixXcd h(dim, dim);
  std::vector<Amplitude> e(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::fill(e.begin(), e.end(), Amplitude{});
    e[j] = 1.0;
    const auto col = apply(e);
    for (std::size_t i = 0; i < dim; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const double span = ev.maxCoeff() - ev.minCoeff();
  return static_cast<int>(std::ceil(span / 2.0 - 1e-9));
}

Observable Observable::from_tag(const std::string& tag, int n) {
  if (tag == "prodX") return prod_x(n);
  if (tag == "prodZ") return prod_z(n);
  PauliString p(tag);
  if (p.n_qubits() != n) throw SetupError("observable '" + tag + "' does not act on " + std::to_string(n) + " qubits");
  return Observable(std::move(p));
}

}  // namespace dqs
