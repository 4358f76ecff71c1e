#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"

namespace siamte {

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), enough to content-address artifacts.
// ---------------------------------------------------------------------------

namespace sha {

struct State {
  uint64_t length = 0;
  std::array<uint32_t, 8> h = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                               0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
  std::array<unsigned char, 64> buf{};
  size_t buf_len = 0;
};

inline uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

inline void compress(State& s, const unsigned char* p) {
  static const uint32_t k[64] = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
      0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
      0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
      0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
      0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
      0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
      0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
      0xc67178f2};
  uint32_t w[64];
  for (int i = 0; i < 16; ++i)
    w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
           (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
  for (int i = 16; i < 64; ++i) {
    uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
    uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  uint32_t a = s.h[0], b = s.h[1], c = s.h[2], d = s.h[3];
  uint32_t e = s.h[4], f = s.h[5], g = s.h[6], h = s.h[7];
  for (int i = 0; i < 64; ++i) {
    uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
    uint32_t ch = (e & f) ^ (~e & g);
    uint32_t t1 = h + s1 + ch + k[i] + w[i];
    uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
    uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    uint32_t t2 = s0 + maj;
    h = g;
    g = f;
    f = e;
    e = d + t1;
    d = c;
    c = b;
    b = a;
    a = t1 + t2;
  }
  s.h[0] += a;
  s.h[1] += b;
  s.h[2] += c;
  s.h[3] += d;
  s.h[4] += e;
  s.h[5] += f;
  s.h[6] += g;
  s.h[7] += h;
}

inline void update(State& s, const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  s.length += n;
  while (n > 0) {
    size_t take = std::min(n, s.buf.size() - s.buf_len);
    std::memcpy(s.buf.data() + s.buf_len, p, take);
    s.buf_len += take;
    p += take;
    n -= take;
    if (s.buf_len == 64) {
      compress(s, s.buf.data());
      s.buf_len = 0;
    }
  }
}

inline std::string finish(State& s) {
  uint64_t bits = s.length * 8;
  unsigned char pad = 0x80;
  update(s, &pad, 1);
  unsigned char zero = 0;
  while (s.buf_len != 56) update(s, &zero, 1);
  unsigned char len[8];
  for (int i = 0; i < 8; ++i) len[i] = (bits >> (56 - 8 * i)) & 0xff;
  update(s, len, 8);
  static const char* hex = "0123456789abcdef";
  std::string out(64, '0');
  for (int i = 0; i < 8; ++i)
    for (int b = 0; b < 4; ++b) {
      unsigned char byte = (s.h[i] >> (24 - 8 * b)) & 0xff;
      out[8 * i + 2 * b] = hex[byte >> 4];
      out[8 * i + 2 * b + 1] = hex[byte & 0xf];
    }
  return out;
}

}  // namespace sha

inline std::string sha256_hex(const void* data, size_t n) {
  sha::State s;
  sha::update(s, data, n);
  return sha::finish(s);
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open file: " + path.string());
  sha::State s;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    sha::update(s, buf, size_t(in.gcount()));
  }
  return sha::finish(s);
}

// ---------------------------------------------------------------------------
// Run manifest: what ran, with which config, over which artifacts.
// ---------------------------------------------------------------------------

struct ArtifactRef {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  nlohmann::json config;
  uint64_t seed = 0;
  std::vector<ArtifactRef> inputs;
  std::vector<ArtifactRef> outputs;
  std::string started_at;
  std::string finished_at;

  void add_input(const std::filesystem::path& p) {
    inputs.push_back({p.string(), sha256_file(p)});
  }
  void add_output(const std::filesystem::path& p) {
    outputs.push_back({p.string(), sha256_file(p)});
  }

  nlohmann::json to_json() const {
    auto refs = [](const std::vector<ArtifactRef>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& r : v) a.push_back({{"path", r.path}, {"sha256", r.sha256}});
      return a;
    };
    return {{"command", command},   {"config", config},
            {"seed", seed},         {"inputs", refs(inputs)},
            {"outputs", refs(outputs)}, {"started_at", started_at},
            {"finished_at", finished_at}};
  }
};

inline std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_run_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "run_manifest.json", std::ios::binary);
  if (!out) throw MissingInputError("cannot write manifest in: " + dir.string());
  out << m.to_json().dump(2) << "\n";
}

}  // namespace siamte
