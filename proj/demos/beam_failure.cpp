// Upper failure probability of the elastically supported beam over the
// default parameter box, for a few yield moments.

#include <cstdio>

#include "lowenv/experiments.hpp"

int main() {
  using namespace lowenv;
  for (double m : {0.080, 0.073, 0.066}) {
    beam::BeamParams p;
    p.M_yield = m;
    const beam::BeamOracle oracle = beam::failure_oracle(p, 41);
    const beam::BeamRun run = beam::run_beam_example(p, 50'000, 7, SolverConfig{});
    std::printf("M_yield %.3f  upper failure %.5f (oracle %.5f at mu=%.2f sigma=%.2f)\n", m, run.upper_failure_prob,
                oracle.upper_failure, oracle.argmax[0], oracle.argmax[1]);
  }
}
