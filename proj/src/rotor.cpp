#include "rotoc/rotor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "rotoc/units.hpp"

namespace rotoc {

void MoleculeSpec::validate() const {
  if (!(b_x > 0.0 && b_y > 0.0 && b_z > 0.0)) {
    throw std::invalid_argument("molecule '" + name + "': rotational constants must be positive");
  }
  if (!(mu() > 0.0)) throw std::invalid_argument("molecule '" + name + "': dipole must be non-zero");
}

MoleculeSpec MoleculeSpec::cpc() {
  return MoleculeSpec{"CPC", 717.42, 639.71, 5905.0, 4.37, 2.83};
}

std::string StateLabel::str() const {
  std::ostringstream os;
  os << j << "_{" << ka << ',' << kc << '}' << m;
  return os.str();
}

StateLabel StateLabel::parse(const std::string& text) {
  std::smatch match;
  static const std::regex braced(R"(^\s*(\d+)_\{(\d+),(\d+)\}(-?\d+)\s*$)");
  static const std::regex compact(R"(^\s*(\d)_?(\d)(\d)(?:_(-?\d+))?\s*$)");
  if (std::regex_match(text, match, braced)) {
    return {std::stoi(match[1]), std::stoi(match[2]), std::stoi(match[3]), std::stoi(match[4])};
  }
  if (std::regex_match(text, match, compact)) {
    const int m = match[4].matched ? std::stoi(match[4]) : 0;
    return {std::stoi(match[1]), std::stoi(match[2]), std::stoi(match[3]), m};
  }
  throw std::invalid_argument("unrecognized state label '" + text + "'");
}

std::size_t FieldFreeSolution::index_of(const StateLabel& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::out_of_range("state " + label.str() + " not in basis");
  return static_cast<std::size_t>(it - labels.begin());
}

FieldFreeSolution field_free_eigensolve(const MoleculeSpec& mol, const RotorBasis& basis) {
  const Eigen::MatrixXd h = rotor_kinetic_matrix(mol, basis).dense();
  const int jmin = std::abs(basis.m());
  const int nblocks = basis.jmax() - jmin + 1;

  struct Block {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    bool ok = true;
  };
  std::vector<Block> blocks(static_cast<std::size_t>(nblocks));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < nblocks; ++b) {
    const int j = jmin + b;
    const auto start = static_cast<Eigen::Index>(basis.block_begin(j));
    const Eigen::Index dim = 2 * j + 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.block(start, start, dim, dim));
    blocks[b].ok = solver.info() == Eigen::Success;
    if (blocks[b].ok) {
      blocks[b].values = solver.eigenvalues();
      blocks[b].vectors = solver.eigenvectors();
    }
  }

  struct State {
    double energy;
    int j;
    int ladder;
  };
  std::vector<State> states;
  for (int b = 0; b < nblocks; ++b) {
    const int j = jmin + b;
    if (!blocks[b].ok) {
      throw EigensolveError(j, "field-free eigensolver did not converge in J = " + std::to_string(j) + " block");
    }
    for (int i = 0; i <= 2 * j; ++i) states.push_back({blocks[b].values(i), j, i});
  }
  // Energy order; exact ties fall back to (J, ladder position).
  std::stable_sort(states.begin(), states.end(), [](const State& a, const State& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return std::pair(a.j, a.ladder) < std::pair(b.j, b.ladder);
  });

  const auto n = static_cast<Eigen::Index>(basis.size());
  FieldFreeSolution sol{basis, Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n), {}};
  sol.labels.reserve(states.size());
  for (Eigen::Index col = 0; col < n; ++col) {
    const auto& s = states[static_cast<std::size_t>(col)];
    const auto start = static_cast<Eigen::Index>(basis.block_begin(s.j));
    sol.energies(col) = s.energy;
    sol.vectors.block(start, col, 2 * s.j + 1, 1) = blocks[s.j - jmin].vectors.col(s.ladder);
    // Deterministic sign: largest-magnitude component positive.
    Eigen::Index imax = 0;
    sol.vectors.col(col).cwiseAbs().maxCoeff(&imax);
    if (sol.vectors(imax, col) < 0.0) sol.vectors.col(col) *= -1.0;
    sol.labels.push_back({s.j, (s.ladder + 1) / 2, s.j - s.ladder / 2, basis.m()});
  }
  return sol;
}

LineList transition_line_list(const FieldFreeSolution& sol, const std::set<CosineAxis>& axes,
                              double threshold) {
  LineList list;
  const auto n = static_cast<Eigen::Index>(sol.size());
  for (CosineAxis axis : axes) {
    const Eigen::MatrixXd c = cos_theta_matrix(axis, sol.basis).dense();
    const Eigen::MatrixXd elements = sol.vectors.transpose() * c * sol.vectors;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const double strength = std::abs(elements(b, a));
        const double freq = (sol.energies(b) - sol.energies(a)) * 1.0e-3;
        if (strength <= threshold || freq <= 1e-9) continue;
        list.transitions.push_back({sol.labels[a], sol.labels[b], static_cast<std::size_t>(a),
                                    static_cast<std::size_t>(b), freq, axis, strength});
      }
    }
  }
  std::stable_sort(list.transitions.begin(), list.transitions.end(),
                   [](const Transition& x, const Transition& y) { return x.frequency_ghz < y.frequency_ghz; });
  return list;
}

double dipole_field_to_frequency(double mu_debye, double field_kvcm) {
  return mu_debye * field_kvcm * units::kDipoleFieldMHz;
}

std::string to_string(OrientationAxis axis) {
  switch (axis) {
    case OrientationAxis::z: return "z";
    case OrientationAxis::x: return "x";
    case OrientationAxis::mu: return "mu";
  }
  return "?";
}

OrientationAxis parse_orientation_axis(const std::string& text) {
  if (text == "z") return OrientationAxis::z;
  if (text == "x") return OrientationAxis::x;
  if (text == "mu") return OrientationAxis::mu;
  throw std::invalid_argument("unknown axis '" + text + "' (expected z, x or mu)");
}

RotorSystem::RotorSystem(MoleculeSpec mol, int jmax, int m)
    : mol_(std::move(mol)),
      basis_(jmax, m),
      rotational_(rotor_kinetic_matrix(mol_, basis_)),
      cos_z_(cos_theta_matrix(CosineAxis::z, basis_)),
      cos_x_(cos_theta_matrix(CosineAxis::x, basis_)),
      cos_mu_(cos_z_.combined(mol_.mu_z / mol_.mu(), cos_x_, mol_.mu_x / mol_.mu())),
      dipole_(cos_z_.combined(mol_.mu_z, cos_x_, mol_.mu_x)),
      coupling_(cos_z_.combined(-units::kDipoleFieldMHz * mol_.mu_z, cos_x_,
                                -units::kDipoleFieldMHz * mol_.mu_x)) {}

const OperatorMatrix& RotorSystem::cosine(OrientationAxis axis) const {
  switch (axis) {
    case OrientationAxis::z: return cos_z_;
    case OrientationAxis::x: return cos_x_;
    case OrientationAxis::mu: return cos_mu_;
  }
  throw std::invalid_argument("bad axis");
}

OperatorMatrix assemble_hamiltonian(const RotorSystem& system, double field_kvcm) {
  if (field_kvcm == 0.0) return system.rotational();
  return system.rotational().combined(1.0, system.coupling(), field_kvcm);
}

MoleculeSpec parse_molecule(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  MoleculeSpec mol;
  mol.name = doc.value("name", std::string("molecule"));
  const auto& b = doc.at("rotational_constants_mhz");
  mol.b_x = b.at("x").get<double>();
  mol.b_y = b.at("y").get<double>();
  mol.b_z = b.at("z").get<double>();
  const auto& d = doc.at("dipole_debye");
  mol.mu_x = d.value("x", 0.0);
  mol.mu_z = d.value("z", 0.0);
  if (d.contains("y") && d.at("y").get<double>() != 0.0) {
    throw std::invalid_argument("molecule '" + mol.name + "': mu_y must be zero (planar rotor)");
  }
  mol.validate();
  return mol;
}

MoleculeSpec load_molecule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open molecule file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_molecule(buffer.str());
}

MoleculeSpec resolve_molecule(const std::string& name_or_path) {
  std::string lower = name_or_path;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cpc") return MoleculeSpec::cpc();
  return load_molecule(name_or_path);
}

}  // namespace rotoc
