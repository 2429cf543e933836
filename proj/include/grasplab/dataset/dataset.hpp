#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "grasplab/core/grid.hpp"
#include "grasplab/image/transform.hpp"

namespace grasplab::dataset {

struct GraspAttempt {
  std::string timestamp;
  std::string window_hash;  // content address of the stored window
  GraspIndex index;
  int reward = 0;
  double psi_pred = 0.0;  // stored with 1e-6 resolution
  std::string method;     // selector token
  std::uint64_t scene_id = 0;
  std::uint64_t snapshot_id = 0;

  friend bool operator==(const GraspAttempt&, const GraspAttempt&) = default;
};

class DuplicateTimestamp : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CorruptRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingleClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ISO-8601 time of a nominal clock (start + seq * step seconds) with a sequence suffix.
std::string make_timestamp(std::uint64_t seq, std::int64_t start_epoch_s = 1767225600, int step_s = 10);

std::uint64_t fnv1a64(std::string_view bytes);

enum class Split { train, test };
inline constexpr double kTestFraction = 0.2;
// u = FNV-1a-64(timestamp) / 2^64; test iff u < 0.2.
Split assign_split(std::string_view timestamp);

// Windows as stored on disk: normalized values shifted to [0, 2] and written as heightmaps.
image::WindowImage quantize_window(const image::WindowImage& w);
std::vector<std::uint8_t> encode_window(const image::WindowImage& w);
image::WindowImage decode_window(const std::vector<std::uint8_t>& bytes);
std::string window_hash(const std::vector<std::uint8_t>& encoded);

// Line format, tab separated:
// timestamp hash k_rot i j k_d reward psi*1e6 method scene snapshot crc32(hex, of the preceding text)
std::string format_record(const GraspAttempt& a);
GraspAttempt parse_record(const std::string& line);

// Append-only attempt log in a directory: attempts.tsv plus windows/<hash>.hm.
// One writer per directory; readers only ever see complete lines.
class AttemptLog {
 public:
  explicit AttemptLog(std::filesystem::path dir);

  // Stores the window (if new), fills attempt.window_hash and appends the record.
  void append(GraspAttempt attempt, const image::WindowImage& window);
  std::vector<GraspAttempt> load_all() const;
  image::WindowImage load_window(const std::string& hash) const;
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path log_path() const { return dir_ / "attempts.tsv"; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::unordered_set<std::string> timestamps_;
};

std::vector<GraspAttempt> read_log(const std::filesystem::path& log_file);

// Class balance: c+ = N / (2 n+), c- = N / (2 n-). Weighted mean reward is exactly 0.5.
std::vector<double> balance_weights(std::span<const int> rewards);
// Negatives weighted kappa, positives 1, then scaled to mean 1.
std::vector<double> asymmetry_weights(std::span<const int> rewards, double kappa);
// balance * asymmetry, rescaled to mean 1; weighted mean reward is 1 / (1 + kappa).
std::vector<double> product_weights(std::span<const int> rewards, double kappa);
// w_i = N (1 - |r_i - psi_i|) / sum_j (1 - |r_j - psi_j|).
std::vector<double> retrain_weights(std::span<const int> rewards, std::span<const double> psi);

}  // namespace grasplab::dataset
