#pragma once

#include <cstddef>
#include <vector>

#include "lqkd/nettop.hpp"

namespace lqkd {

/// Sifted key symbols of one layer. holders[0] is the hub; symbols[h][k] is
/// holder h's k-th symbol (-1 when that holder's outcome carried none).
struct LayerKey {
  int layer = 0;
  int alphabet = 2;
  std::vector<ParticipantId> holders;
  std::vector<std::vector<int>> symbols;
  std::vector<std::size_t> rounds;  // source round of each position

  std::size_t length() const { return rounds.size(); }

  bool agrees() const {
    for (std::size_t h = 1; h < symbols.size(); ++h)
      if (symbols[h] != symbols[0]) return false;
    return true;
  }

  const std::vector<int>& hub_symbols() const { return symbols.front(); }
};

struct KeyMaterial {
  std::vector<LayerKey> layers;
};

}  // namespace lqkd
