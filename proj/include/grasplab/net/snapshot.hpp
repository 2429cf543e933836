#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grasplab/net/layers.hpp"

namespace grasplab::net {

using SnapshotId = std::uint64_t;

inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSnapshot : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Binary layout: "GLSNAP01", u32 version, u32 layer count, per layer six u32 fields
// (out, in, kernel, stride, batch_norm, has_bias), then every tensor as float32 LE
// in declaration order (kernel, bias, gamma, beta, running_mean, running_var).
std::vector<std::uint8_t> encode_snapshot(const NetworkParams& p);
NetworkParams decode_snapshot(const std::vector<std::uint8_t>& bytes);

void save_snapshot(const NetworkParams& p, const std::filesystem::path& path);
NetworkParams load_snapshot(const std::filesystem::path& path);

// Immutable, numbered parameter sets. Writers publish, readers share the same const object.
// With a directory, each snapshot is also written to <dir>/snapshot-<id>.bin (tmp + rename).
class SnapshotStore {
 public:
  SnapshotStore() = default;
  explicit SnapshotStore(std::filesystem::path dir);

  SnapshotId publish(const NetworkParams& p);
  std::shared_ptr<const NetworkParams> restore(SnapshotId id) const;
  // Newest snapshot; nullopt when nothing has been published.
  std::optional<std::pair<SnapshotId, std::shared_ptr<const NetworkParams>>> latest() const;
  std::vector<SnapshotId> ids() const;

  static std::filesystem::path file_name(const std::filesystem::path& dir, SnapshotId id);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<SnapshotId, std::shared_ptr<const NetworkParams>> cache_;
  SnapshotId next_ = 1;
};

}  // namespace grasplab::net
