#pragma once

#include <Eigen/Core>

namespace fiberair {

/// Symbol alphabet, normalized to unit average energy.
struct Constellation {
  Eigen::ArrayXcd points;
  int size() const { return static_cast<int>(points.size()); }
};

/// Length-K sequence of constellation indices.
using SymbolSequence = Eigen::ArrayXi;

/// Gray-ordered square QAM grid with unit average energy.
/// Throws std::invalid_argument unless order is a perfect square >= 4.
Constellation build_square_qam(int order);

/// Uniform input law over an M-point alphabet.
Eigen::ArrayXd uniform_input_law(int size);

/// K iid symbols drawn from the uniform law.
class Rng;
SymbolSequence random_symbols(int count, int alphabet_size, Rng& rng);

}  // namespace fiberair
