#include "standin/common.hpp"

namespace standin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::UnclassifiableCase: return "UnclassifiableCase";
    case ErrorKind::InconsistentEff: return "InconsistentEff";
    case ErrorKind::MissingUniverse: return "MissingUniverse";
    case ErrorKind::SamplerCannotEqualize: return "SamplerCannotEqualize";
    case ErrorKind::UnsortedSeries: return "UnsortedSeries";
    case ErrorKind::InfiniteDomain: return "InfiniteDomain";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::MalformedSpec: return "MalformedSpec";
    case ErrorKind::UnreachablePair: return "UnreachablePair";
    case ErrorKind::NotATrafficRun: return "NotATrafficRun";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
  std::uint64_t h = fnv1a(kFnvOffset, &base, sizeof(base));
  h = fnv1a(h, label.data(), label.size());
  h = fnv1a(h, &index, sizeof(index));
  return splitmix64(h);
}

}  // namespace standin
