#include "levyctl/rng.hpp"

namespace levyctl {
namespace {

// Marsaglia & Tsang (2000) ziggurat tables for the standard normal, 128 layers.
constexpr double kTail = 3.442619855899;

struct ZigguratTables {
  std::array<std::uint32_t, 128> k{};
  std::array<double, 128> w{};
  std::array<double, 128> f{};

  ZigguratTables() {
    constexpr double m1 = 2147483648.0;
    constexpr double area = 9.91256303526217e-3;
    double dn = kTail;
    double tn = dn;
    const double q = area / std::exp(-0.5 * dn * dn);
    k[0] = static_cast<std::uint32_t>((dn / q) * m1);
    k[1] = 0;
    w[0] = q / m1;
    w[127] = dn / m1;
    f[0] = 1.0;
    f[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(area / dn + std::exp(-0.5 * dn * dn)));
      k[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
      tn = dn;
      f[i] = std::exp(-0.5 * dn * dn);
      w[i] = dn / m1;
    }
  }
};

const ZigguratTables kTables;

}  // namespace

namespace detail {
std::array<std::uint32_t, 128> kZigK = kTables.k;
std::array<double, 128> kZigW = kTables.w;
}  // namespace detail

double StreamRng::normal_slow(std::size_t iz, std::int32_t hz) {
  const auto& zt = kTables;
  for (;;) {
    const double x = hz * zt.w[iz];
    if (iz == 0) {
      double tx;
      double ty;
      do {
        tx = -std::log(uniform()) / kTail;
        ty = -std::log(uniform());
      } while (ty + ty < tx * tx);
      return hz > 0 ? kTail + tx : -kTail - tx;
    }
    if (zt.f[iz] + uniform() * (zt.f[iz - 1] - zt.f[iz]) < std::exp(-0.5 * x * x)) return x;
    // Rejected in the wedge: draw a fresh layer and magnitude.
    const std::uint64_t bits = (*this)();
    iz = static_cast<std::size_t>(bits & 127U);
    hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(bits >> 32));
    const auto mag = static_cast<std::uint32_t>(hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
    if (mag < zt.k[iz]) return hz * zt.w[iz];
  }
}

}  // namespace levyctl
