// Copyright 2026 The pbmvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pairwise-mask secure aggregation in the style of Bonawitz et al.
//
// Every unordered pair of parties shares a seed dealt at setup. For each
// round and coordinate the pair derives two directed values u(a, b) and
// u(b, a) in [0, b). Party m adds p(m, m') = u(m, m') - u(m', m) for every
// other party m'; the perturbations are antisymmetric, so they cancel in the
// server's sum and only the plaintext total is revealed.

#ifndef PBMVFL_SECUREAGG_HPP_
#define PBMVFL_SECUREAGG_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pbmvfl/errors.hpp"
#include "pbmvfl/pbm.hpp"
#include "pbmvfl/random.hpp"

namespace pbmvfl {

using PartyId = std::uint16_t;

struct PairwiseSeed {
  PartyId party_a = 0;
  PartyId party_b = 1;
  std::uint64_t seed = 0;
};

/// Position of a masked value inside one round: dataset row and embedding
/// coordinate.
struct Coord {
  std::uint32_t sample = 0;
  std::uint16_t coord = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;

  std::uint64_t counter() const noexcept {
    return (static_cast<std::uint64_t>(sample) << 16) | coord;
  }
};

struct MaskedShare {
  PartyId party = 0;
  std::int64_t y = 0;
  std::uint32_t round = 0;
  Coord coord;
};

/// Which of the two directed values of a pair a stream produces.
enum class MaskDirection : std::uint8_t {
  kLowToHigh = 0x4c,  // u(party_a, party_b)
  kHighToLow = 0x48,  // u(party_b, party_a)
};

/// One seed per unordered pair, dealt by a trusted setup step.
class SeedBook {
 public:
  SeedBook() = default;

  static SeedBook deal(std::size_t num_parties, std::uint64_t setup_seed) {
    if (num_parties == 0 || num_parties > 0xffff) throw ConfigError("secureagg: bad party count");
    SeedBook book;
    book.num_parties_ = num_parties;
    Rng rng = make_rng(setup_seed, {0x5eedb00cULL});
    for (std::size_t a = 0; a < num_parties; ++a) {
      for (std::size_t b = a + 1; b < num_parties; ++b) {
        book.seeds_.push_back({static_cast<PartyId>(a), static_cast<PartyId>(b), rng()});
      }
    }
    return book;
  }

  std::size_t num_parties() const noexcept { return num_parties_; }
  std::span<const PairwiseSeed> all() const noexcept { return seeds_; }

  /// Seed material a single party holds: the M - 1 pairs it belongs to.
  std::vector<PairwiseSeed> seeds_for(PartyId party) const {
    std::vector<PairwiseSeed> out;
    for (const auto& s : seeds_) {
      if (s.party_a == party || s.party_b == party) out.push_back(s);
    }
    return out;
  }

 private:
  std::size_t num_parties_ = 0;
  std::vector<PairwiseSeed> seeds_;
};

namespace detail {

// Counter-mode keyed generator: word(seed, direction, round, counter, attempt).
inline std::uint64_t mask_word(const PairwiseSeed& seed, MaskDirection dir, std::uint32_t round,
                               std::uint64_t counter, std::uint64_t attempt) noexcept {
  std::uint64_t h = mix64(seed.seed ^ 0x7365637572656167ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(seed.party_a) << 16 | seed.party_b));
  h = mix64(h ^ static_cast<std::uint64_t>(dir));
  h = mix64(h ^ round);
  h = mix64(h ^ counter);
  return mix64(h ^ attempt);
}

}  // namespace detail

/// Directed mask value for one coordinate counter, uniform on [0, b).
inline std::int64_t mask_value(const PairwiseSeed& seed, MaskDirection dir, std::uint32_t round,
                               std::uint64_t counter, std::int64_t b) {
  if (b < 1) throw ConfigError("secureagg: b must be >= 1");
  const auto range = static_cast<std::uint64_t>(b);
  // Rejection keeps the value exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range + 1) % range;
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t w = detail::mask_word(seed, dir, round, counter, attempt);
    if (w <= limit) return static_cast<std::int64_t>(w % range);
  }
}

/// First `count` values of a directed stream (counters 0 .. count-1).
inline std::vector<std::int64_t> derive_mask_stream(const PairwiseSeed& seed, MaskDirection dir,
                                                    std::uint32_t round, std::size_t count,
                                                    std::int64_t b) {
  std::vector<std::int64_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(mask_value(seed, dir, round, i, b));
  return out;
}

/// y = q + sum_j (outgoing[j] - incoming[j]).
inline std::int64_t apply_masks(std::int64_t q, std::span<const std::int64_t> outgoing,
                                std::span<const std::int64_t> incoming) {
  if (outgoing.size() != incoming.size()) throw ConfigError("secureagg: mask arity mismatch");
  std::int64_t y = q;
  for (std::size_t j = 0; j < outgoing.size(); ++j) y += outgoing[j] - incoming[j];
  return y;
}

/// The masking side of one party. Holds only this party's pair seeds.
class PartyMasker {
 public:
  PartyMasker(PartyId self, std::size_t num_parties, std::span<const PairwiseSeed> seeds,
              std::int64_t b)
      : self_(self), b_(b) {
    if (self >= num_parties) throw ConfigError("secureagg: party id out of range");
    if (b < 1) throw ConfigError("secureagg: b must be >= 1");
    for (const auto& s : seeds) {
      if (s.party_a >= s.party_b) throw ConfigError("secureagg: pair seed must have party_a < party_b");
      if (s.party_a == self) peers_[s.party_b] = s;
      else if (s.party_b == self) peers_[s.party_a] = s;
    }
    for (std::size_t other = 0; other < num_parties; ++other) {
      if (other == self) continue;
      if (!peers_.contains(static_cast<PartyId>(other))) {
        std::ostringstream msg;
        msg << "secureagg: party " << self << " has no seed shared with party " << other;
        throw ConfigError(msg.str());
      }
    }
  }

  PartyId party() const noexcept { return self_; }

  MaskedShare mask(QuantizedValue q, std::uint32_t round, Coord coord) const {
    if (q.q < 0 || q.q > b_) throw DomainError("secureagg: quantized value outside [0, b]");
    std::int64_t y = q.q;
    const std::uint64_t counter = coord.counter();
    for (const auto& [other, seed] : peers_) {
      const bool low = self_ < other;
      const auto out_dir = low ? MaskDirection::kLowToHigh : MaskDirection::kHighToLow;
      const auto in_dir = low ? MaskDirection::kHighToLow : MaskDirection::kLowToHigh;
      const std::int64_t u_out = mask_value(seed, out_dir, round, counter, b_);
      const std::int64_t u_in = mask_value(seed, in_dir, round, counter, b_);
      y += u_out - u_in;
    }
    return {self_, y, round, coord};
  }

 private:
  PartyId self_;
  std::int64_t b_;
  std::map<PartyId, PairwiseSeed> peers_;
};

/// Server side: sums one coordinate's M shares. Requires exactly one share
/// per party, all for the same round and coordinate.
inline std::int64_t unmask_sum(std::span<const MaskedShare> shares, std::size_t num_parties,
                               std::int64_t b) {
  if (shares.size() != num_parties) {
    std::ostringstream msg;
    msg << "secureagg: expected " << num_parties << " shares, got " << shares.size();
    throw ProtocolError(msg.str());
  }
  std::vector<bool> seen(num_parties, false);
  std::int64_t sum = 0;
  for (const auto& s : shares) {
    if (s.party >= num_parties || seen[s.party]) {
      throw ProtocolError("secureagg: missing or duplicate party share");
    }
    if (s.round != shares.front().round || s.coord != shares.front().coord) {
      throw ProtocolError("secureagg: shares from different rounds or coordinates");
    }
    seen[s.party] = true;
    sum += s.y;
  }
  if (sum < 0 || sum > b * static_cast<std::int64_t>(num_parties)) {
    throw ProtocolError("secureagg: unmasked sum outside [0, bM]");
  }
  return sum;
}

/// Bits per transmitted masked value: ceil(log2((2M - 1) b)) + 1.
inline int mask_bit_width(std::size_t num_parties, std::int64_t b) {
  if (num_parties < 1 || b < 1) throw ConfigError("secureagg: bad width arguments");
  const auto span = static_cast<std::uint64_t>(2 * num_parties - 1) * static_cast<std::uint64_t>(b);
  return static_cast<int>(std::bit_width(span - 1)) + 1;
}

/// Offset added to y before packing so every feasible value is non-negative.
inline std::int64_t mask_offset(std::size_t num_parties, std::int64_t b) {
  return static_cast<std::int64_t>(num_parties - 1) * b;
}

/// Masked values of one party for one round, bit-packed at the mask width.
struct PackedShares {
  PartyId party = 0;
  std::uint32_t round = 0;
  std::size_t count = 0;
  int width = 0;
  std::vector<std::uint8_t> bytes;

  std::size_t bits() const noexcept { return count * static_cast<std::size_t>(width); }
};

inline PackedShares pack_shares(PartyId party, std::uint32_t round, std::span<const std::int64_t> ys,
                                std::size_t num_parties, std::int64_t b) {
  PackedShares out;
  out.party = party;
  out.round = round;
  out.count = ys.size();
  out.width = mask_bit_width(num_parties, b);
  out.bytes.assign((out.bits() + 7) / 8, 0);
  const std::int64_t offset = mask_offset(num_parties, b);
  const std::uint64_t max_code = (std::uint64_t{1} << out.width) - 1;
  std::size_t pos = 0;
  for (std::int64_t y : ys) {
    const std::int64_t shifted = y + offset;
    if (shifted < 0 || static_cast<std::uint64_t>(shifted) > max_code) {
      throw ProtocolError("secureagg: masked value does not fit the wire width");
    }
    const auto code = static_cast<std::uint64_t>(shifted);
    for (int k = 0; k < out.width; ++k, ++pos) {
      if ((code >> k) & 1U) out.bytes[pos / 8] |= static_cast<std::uint8_t>(1U << (pos % 8));
    }
  }
  return out;
}

inline std::vector<std::int64_t> unpack_shares(const PackedShares& packed, std::size_t num_parties,
                                               std::int64_t b) {
  if (packed.width != mask_bit_width(num_parties, b) || packed.bytes.size() * 8 < packed.bits()) {
    throw ProtocolError("secureagg: malformed packed payload");
  }
  const std::int64_t offset = mask_offset(num_parties, b);
  std::vector<std::int64_t> ys;
  ys.reserve(packed.count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < packed.count; ++i) {
    std::uint64_t code = 0;
    for (int k = 0; k < packed.width; ++k, ++pos) {
      if ((packed.bytes[pos / 8] >> (pos % 8)) & 1U) code |= std::uint64_t{1} << k;
    }
    ys.push_back(static_cast<std::int64_t>(code) - offset);
  }
  return ys;
}

/// In-process message queue between simulated actors. FIFO, so each sender's
/// messages arrive in send order and exactly once. The meter hook is called
/// with the charged bit count of every message sent.
template <typename Message>
class CommChannel {
 public:
  using Meter = std::function<void(std::size_t bits)>;

  CommChannel() = default;
  explicit CommChannel(Meter meter) : meter_(std::move(meter)) {}

  CommChannel(const CommChannel&) = delete;
  CommChannel& operator=(const CommChannel&) = delete;

  void send(Message msg, std::size_t bits) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(msg));
      if (meter_) meter_(bits);
    }
    ready_.notify_one();
  }

  std::optional<Message> try_receive() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    Message msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

  /// Blocks until `count` messages are available and returns them in
  /// arrival order.
  std::vector<Message> receive_n(std::size_t count) {
    std::unique_lock lock(mu_);
    ready_.wait(lock, [&] { return queue_.size() >= count; });
    std::vector<Message> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    return out;
  }

  std::size_t pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable ready_;
  std::deque<Message> queue_;
  Meter meter_;
};

/// One masked value as written to a transcript file: 20 bytes,
/// little-endian (round u32, party u16, sample u32, coord u16, y i64).
struct TranscriptRecord {
  std::uint32_t round = 0;
  std::uint16_t party = 0;
  std::uint32_t sample = 0;
  std::uint16_t coord = 0;
  std::int64_t y = 0;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

inline constexpr std::size_t kTranscriptRecordBytes = 20;

namespace detail {

template <typename T>
void put_le(std::array<std::uint8_t, kTranscriptRecordBytes>& buf, std::size_t& at, T value) {
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[at++] = static_cast<std::uint8_t>(u >> (8 * i));
}

template <typename T>
T get_le(const std::array<std::uint8_t, kTranscriptRecordBytes>& buf, std::size_t& at) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(buf[at++]) << (8 * i));
  }
  return static_cast<T>(u);
}

}  // namespace detail

inline void write_transcript(std::ostream& os, std::span<const TranscriptRecord> records) {
  std::array<std::uint8_t, kTranscriptRecordBytes> buf{};
  for (const auto& r : records) {
    std::size_t at = 0;
    detail::put_le(buf, at, r.round);
    detail::put_le(buf, at, r.party);
    detail::put_le(buf, at, r.sample);
    detail::put_le(buf, at, r.coord);
    detail::put_le(buf, at, r.y);
    os.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
}

inline std::vector<TranscriptRecord> read_transcript(std::istream& is) {
  std::vector<TranscriptRecord> out;
  std::array<std::uint8_t, kTranscriptRecordBytes> buf{};
  while (is.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    std::size_t at = 0;
    TranscriptRecord r;
    r.round = detail::get_le<std::uint32_t>(buf, at);
    r.party = detail::get_le<std::uint16_t>(buf, at);
    r.sample = detail::get_le<std::uint32_t>(buf, at);
    r.coord = detail::get_le<std::uint16_t>(buf, at);
    r.y = detail::get_le<std::int64_t>(buf, at);
    out.push_back(r);
  }
  if (is.gcount() != 0) throw ProtocolError("secureagg: truncated transcript record");
  return out;
}

}  // namespace pbmvfl

#endif  // PBMVFL_SECUREAGG_HPP_
