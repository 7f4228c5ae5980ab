#pragma once

#include <algorithm>
#include <vector>

#include "levyctl/parallel.hpp"

namespace levyctl {

template <class Fn>
void for_each_path(const PathGenerator& gen, SampleMatrix& out, Fn&& fn) {
  const std::size_t n = gen.steps() + 1;
  if (gen.deterministic()) {
    std::vector<double> x0(n);
    gen.generate(0, x0);
    fn(std::size_t{0}, std::span<const double>(x0), out.row(0));
    const auto first = out.row(0);
    for (std::size_t p = 1; p < out.rows(); ++p) std::copy(first.begin(), first.end(), out.row(p).begin());
    return;
  }
  const unsigned workers = resolve_workers(gen.config().workers);
  const std::size_t blocks = std::min<std::size_t>(workers, out.rows());
  parallel_for(blocks, workers, [&](std::size_t w) {
    std::vector<double> x0(n);
    const std::size_t begin = out.rows() * w / blocks;
    const std::size_t end = out.rows() * (w + 1) / blocks;
    for (std::size_t p = begin; p < end; ++p) {
      gen.generate(p, x0);
      fn(p, std::span<const double>(x0), out.row(p));
    }
  });
}

}  // namespace levyctl
