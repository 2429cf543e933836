#include "grasplab/net/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>

namespace grasplab::net {

namespace {

constexpr char kMagic[8] = {'G', 'L', 'S', 'N', 'A', 'P', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > bytes.size()) throw SnapshotFormatError("snapshot truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  void tensor(std::vector<float>& t) {
    for (auto& v : t) v = std::bit_cast<float>(u32());
  }
};

std::vector<std::vector<float>*> tensors_of(LayerParams<float>& l) {
  return {&l.kernel, &l.bias, &l.gamma, &l.beta, &l.running_mean, &l.running_var};
}

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const NetworkParams& p) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kSnapshotVersion);
  put_u32(out, kLayerCount);
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& s = kLayerTable[l];
    for (std::uint32_t v : {std::uint32_t(s.out_channels), std::uint32_t(in_channels(l)), std::uint32_t(s.kernel),
                            std::uint32_t(s.stride), std::uint32_t(s.batch_norm), std::uint32_t(!s.batch_norm)})
      put_u32(out, v);
  }
  auto copy = p;
  for (auto& layer : copy.layers)
    for (auto* t : tensors_of(layer))
      for (float v : *t) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

NetworkParams decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw SnapshotFormatError("bad snapshot magic");
  Reader r{bytes, 8};
  if (r.u32() != kSnapshotVersion) throw SnapshotFormatError("unsupported snapshot version");
  if (r.u32() != kLayerCount) throw SnapshotFormatError("layer count mismatch");
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& s = kLayerTable[l];
    const std::uint32_t expect[6] = {std::uint32_t(s.out_channels), std::uint32_t(in_channels(l)),
                                     std::uint32_t(s.kernel),       std::uint32_t(s.stride),
                                     std::uint32_t(s.batch_norm),   std::uint32_t(!s.batch_norm)};
    for (auto e : expect)
      if (r.u32() != e) throw SnapshotFormatError("layer table of layer " + std::to_string(l + 1) + " differs");
  }
  auto p = zero_params<float>();
  for (auto& layer : p.layers)
    for (auto* t : tensors_of(layer)) r.tensor(*t);
  if (r.pos != bytes.size()) throw SnapshotFormatError("trailing bytes in snapshot");
  return p;
}

void save_snapshot(const NetworkParams& p, const std::filesystem::path& path) {
  const auto bytes = encode_snapshot(p);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

NetworkParams load_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UnknownSnapshot("no snapshot at " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

SnapshotStore::SnapshotStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  // Continue numbering after snapshots already on disk.
  const std::regex pat("snapshot-(\\d+)\\.bin");
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, pat)) next_ = std::max<SnapshotId>(next_, std::stoull(m[1]) + 1);
  }
}

std::filesystem::path SnapshotStore::file_name(const std::filesystem::path& dir, SnapshotId id) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "snapshot-%06llu.bin", static_cast<unsigned long long>(id));
  return dir / buf;
}

SnapshotId SnapshotStore::publish(const NetworkParams& p) {
  auto frozen = std::make_shared<const NetworkParams>(p);
  std::lock_guard lock(mu_);
  const SnapshotId id = next_++;
  if (!dir_.empty()) save_snapshot(p, file_name(dir_, id));
  cache_[id] = std::move(frozen);
  return id;
}

std::shared_ptr<const NetworkParams> SnapshotStore::restore(SnapshotId id) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  if (!dir_.empty() && std::filesystem::exists(file_name(dir_, id))) {
    auto p = std::make_shared<const NetworkParams>(load_snapshot(file_name(dir_, id)));
    cache_[id] = p;
    return p;
  }
  throw UnknownSnapshot("unknown snapshot id " + std::to_string(id));
}

std::optional<std::pair<SnapshotId, std::shared_ptr<const NetworkParams>>> SnapshotStore::latest() const {
  SnapshotId newest = 0;
  {
    std::lock_guard lock(mu_);
    if (next_ == 1) return std::nullopt;
    newest = next_ - 1;
  }
  return std::make_pair(newest, restore(newest));
}

std::vector<SnapshotId> SnapshotStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<SnapshotId> out;
  for (SnapshotId id = 1; id < next_; ++id)
    if (cache_.count(id) || (!dir_.empty() && std::filesystem::exists(file_name(dir_, id)))) out.push_back(id);
  return out;
}

}  // namespace grasplab::net
