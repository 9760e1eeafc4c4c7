// Closed-form complexity exponent vs SNR, sparse-aware and unaware.
#include <fmt/format.h>

#include "ssd/complexity.hpp"

int main() {
  using namespace ssd;
  const int m = 20, n = 20, l = 5;
  const Alphabet alphabet = Alphabet::binary01();
  fmt::print("{:>6} {:>10} {:>10}\n", "snr", "e_c", "unaware");
  for (double snr = 0.0; snr <= 20.0; snr += 2.5) {
    const double sigma2 = sigma2_from_snr(snr, m, l, alphabet);
    const double d2 = choose_radius(n, sigma2, 0.99);
    const auto aware = analyze(m, n, l, alphabet, sigma2, d2);
    const auto unaware = analyze(m, n, l, alphabet, sigma2, d2, CostModel{}, false);
    fmt::print("{:>6.1f} {:>10.4f} {:>10.4f}\n", snr, aware.exponent, unaware.exponent);
  }
}
