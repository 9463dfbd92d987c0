// Pointwise stability scan of a single kinematic state.
//
//   sample_certify_state [F11 F12 F21 F22 phi]

#include <cstdlib>
#include <iostream>

#include "cosserat/stability.hpp"

int main(int argc, char** argv)
{
  using namespace cosserat;

  Mat2 F = Mat2::diag(1.1, 1.0);
  double phi = 0.8;
  if (argc == 6) {
    F = {std::atof(argv[1]), std::atof(argv[2]), std::atof(argv[3]), std::atof(argv[4])};
    phi = std::atof(argv[5]);
  }
  MaterialParams p;
  p.D = director_from_angle(1.0);
  const KinematicState st{F, director_from_angle(phi), {}};

  try {
    const StabilityConfig cfg;
    const LhMinimum lh = lh_minimum_at(st, p, cfg);
    const RankOneMinimum r1 = rank_one_minimum_at(st, p, cfg);
    std::cout << "W = " << energy_density(st, p) << '\n'
              << "frame residual = " << frame_invariance_residual(st, p) << '\n'
              << "min LH = " << lh.value << " at s = (" << lh.s.x << ", " << lh.s.y << "), T = (" << lh.T.x << ", "
              << lh.T.y << "), b = " << lh.b << '\n'
              << "min rank-one = " << r1.value << " (" << r1.skipped << " probes skipped)\n";
    return lh.value > 0.0 ? 0 : 2;
  } catch (const NonPositiveJacobian& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
