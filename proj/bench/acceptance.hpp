// The ten end-to-end acceptance criteria, shared by the `acceptance` test
// binary and `topo-opt check`.
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace topo::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria();

/// Runs the selected criteria (all when `only` is empty) and prints one
/// `PASS`/`FAIL` line per criterion. Returns true when all pass.
bool run(const std::vector<int>& only, std::ostream& out);

}  // namespace topo::acceptance
