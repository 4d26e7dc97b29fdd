// Lower envelope of P(X > 0) over normal laws with mean in [-1, 1], both
// backends on the same seed, against the quadrature oracle.

#include <cstdio>

#include "lowenv/experiments.hpp"

int main() {
  using namespace lowenv;
  const Family family = make_normal_family(ParamBox({-1.0, 1.0}, {1.0, 1.0}));
  const Integrand f = positive_indicator();
  const Distribution central = Distribution::normal(0.0, 1.0);
  const EnvelopeOracle oracle = envelope_oracle(f, family, 21);
  std::printf("oracle %.6f at mu = %.3f\n", oracle.value, oracle.argmin[0]);
  for (Backend b : {Backend::inverse_transform, Backend::importance}) {
    for (std::size_t n : {100u, 10'000u, 100'000u}) {
      const EnvelopeEstimate e = lower_envelope_estimate(f, family, central, b, n, 42, SolverConfig{});
      std::printf("%-17s n=%-8zu estimate %.6f at mu = %.3f\n", to_string(b).c_str(), n, e.value, e.argmin[0]);
    }
  }
}
