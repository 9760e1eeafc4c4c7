// Decode one random sparse binary instance with every decoder and compare.
#include <iostream>

#include <fmt/format.h>

#include "ssd/bound.hpp"
#include "ssd/decoder.hpp"

int main() {
  using namespace ssd;
  const GenSpec spec{16, 16, Alphabet::binary01(), 4, 8.0, 2024};
  const GeneratedInstance gen = generate_instance(spec);

  auto show = [&](const char* name, const DecodeResult& r) {
    const auto errors = (r.x_hat.array() != gen.x_true.array()).count();
    fmt::print("{:<12} residual2={:<10.5g} nodes={:<6} flops={:<7} restarts={} errors={}\n", name, r.residual2,
               r.stats.total_nodes(), r.stats.flops, r.stats.radius_restarts, errors);
  };

  show("sparse", decode_sparse(gen.instance));
  show("sparse_se", decode_sparse_se(gen.instance));
  show("sparse_lb", decode_sparse_lb(gen.instance));
  show("classical", decode_classical(gen.instance));
  show("omp", decode_omp_round(gen.instance));
  show("brute_force", brute_force(gen.instance));
}
