#include "ym/rng.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace ym {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream RngStream::substream(std::uint64_t master, std::string_view tag) {
  return RngStream(splitmix64(master ^ fnv1a(tag)));
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; unit() never returns exactly 1, and u1 is shifted away from 0.
  double u1 = unit();
  double u2 = unit();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.141592653589793 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << eng_ << " " << (has_spare_ ? 1 : 0) << " " << n_words_ << " ";
  // Spare is stored as raw bits so the round trip is exact.
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(spare_));
  std::memcpy(&bits, &spare_, sizeof(bits));
  os << bits;
  return os.str();
}

void RngStream::deserialize(const std::string& text) {
  std::istringstream is(text);
  int has = 0;
  std::uint64_t bits = 0;
  is >> eng_ >> has >> n_words_ >> bits;
  YM_CHECK(!is.fail(), "RngStream: bad serialized state");
  has_spare_ = (has != 0);
  std::memcpy(&spare_, &bits, sizeof(bits));
}

}  // namespace ym
