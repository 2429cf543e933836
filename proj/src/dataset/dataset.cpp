#include "grasplab/dataset/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "grasplab/image/heightmap_io.hpp"

namespace grasplab::dataset {

std::string make_timestamp(std::uint64_t seq, std::int64_t start_epoch_s, int step_s) {
  const std::time_t t = static_cast<std::time_t>(start_epoch_s + static_cast<std::int64_t>(seq) * step_s);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  char out[96];
  std::snprintf(out, sizeof out, "%s-%08llu", buf, static_cast<unsigned long long>(seq));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Split assign_split(std::string_view timestamp) {
  const double u = static_cast<double>(fnv1a64(timestamp)) * 0x1.0p-64;
  return u < kTestFraction ? Split::test : Split::train;
}

namespace {

constexpr double kWindowOffset = 1.0;  // stored depth = (value + 1) * range

image::DepthImage window_as_heightmap(const image::WindowImage& w) {
  image::DepthImage img(image::kWindowSize, image::kWindowSize, image::kPixelPitchMm);
  for (int r = 0; r < image::kWindowSize; ++r)
    for (int c = 0; c < image::kWindowSize; ++c)
      img.at(r, c) = static_cast<float>((w.at(r, c) + kWindowOffset) * image::kNormalizationRangeMm);
  return img;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint32_t crc_of(const std::string& s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

template <class I>
I parse_int(const std::string& s, const char* what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw CorruptRecord(std::string("unparsable ") + what + " '" + s + "'");
  }
  if (used != s.size()) throw CorruptRecord(std::string("unparsable ") + what + " '" + s + "'");
  return static_cast<I>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_window(const image::WindowImage& w) {
  return image::encode_heightmap(window_as_heightmap(w));
}

image::WindowImage decode_window(const std::vector<std::uint8_t>& bytes) {
  const auto img = image::decode_heightmap(bytes);
  if (img.width() != image::kWindowSize || img.height() != image::kWindowSize)
    throw image::HeightmapFormatError("stored window is not 32x32");
  image::WindowImage w;
  for (int r = 0; r < image::kWindowSize; ++r)
    for (int c = 0; c < image::kWindowSize; ++c)
      w.values[r * image::kWindowSize + c] =
          static_cast<float>(img.at(r, c) / image::kNormalizationRangeMm - kWindowOffset);
  return w;
}

image::WindowImage quantize_window(const image::WindowImage& w) {
  auto q = decode_window(encode_window(w));
  q.x = w.x;
  q.y = w.y;
  q.a = w.a;
  return q;
}

std::string window_hash(const std::vector<std::uint8_t>& encoded) {
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(encoded.data()), encoded.size())));
}

std::string format_record(const GraspAttempt& a) {
  if (a.timestamp.empty() || a.timestamp.find_first_of("\t\n") != std::string::npos)
    throw std::invalid_argument("timestamp must be nonempty and free of tabs/newlines");
  if (a.method.find_first_of("\t\n") != std::string::npos) throw std::invalid_argument("bad method token");
  if (a.reward != 0 && a.reward != 1) throw std::invalid_argument("reward must be 0 or 1");
  std::ostringstream s;
  s << a.timestamp << '\t' << a.window_hash << '\t' << a.index.k_rot << '\t' << a.index.i << '\t' << a.index.j
    << '\t' << a.index.k_d << '\t' << a.reward << '\t' << std::llround(a.psi_pred * 1e6) << '\t' << a.method << '\t'
    << a.scene_id << '\t' << a.snapshot_id;
  const std::string body = s.str();
  char crc[9];
  std::snprintf(crc, sizeof crc, "%08x", crc_of(body));
  return body + '\t' + crc;
}

GraspAttempt parse_record(const std::string& line) {
  const auto tab = line.rfind('\t');
  if (tab == std::string::npos) throw CorruptRecord("record without checksum");
  const std::string body = line.substr(0, tab);
  char crc[9];
  std::snprintf(crc, sizeof crc, "%08x", crc_of(body));
  if (line.substr(tab + 1) != crc) throw CorruptRecord("checksum mismatch in record '" + body.substr(0, 40) + "'");
  const auto f = split_tabs(body);
  if (f.size() != 11) throw CorruptRecord("record has " + std::to_string(f.size()) + " fields");
  GraspAttempt a;
  a.timestamp = f[0];
  a.window_hash = f[1];
  a.index = {parse_int<int>(f[2], "k_rot"), parse_int<int>(f[3], "i"), parse_int<int>(f[4], "j"),
             parse_int<int>(f[5], "k_d")};
  if (!a.index.valid()) throw CorruptRecord("grasp index out of range");
  a.reward = parse_int<int>(f[6], "reward");
  if (a.reward != 0 && a.reward != 1) throw CorruptRecord("reward not binary");
  a.psi_pred = static_cast<double>(parse_int<long long>(f[7], "psi")) / 1e6;
  a.method = f[8];
  a.scene_id = parse_int<std::uint64_t>(f[9], "scene id");
  a.snapshot_id = parse_int<std::uint64_t>(f[10], "snapshot id");
  return a;
}

std::vector<GraspAttempt> read_log(const std::filesystem::path& log_file) {
  std::vector<GraspAttempt> out;
  std::ifstream f(log_file, std::ios::binary);
  if (!f) return out;
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::unordered_set<std::string> seen;
  std::size_t start = 0;
  for (;;) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) break;  // a partially written tail is not yet visible
    auto rec = parse_record(text.substr(start, nl - start));
    if (!seen.insert(rec.timestamp).second) throw DuplicateTimestamp("duplicate timestamp " + rec.timestamp);
    out.push_back(std::move(rec));
    start = nl + 1;
  }
  return out;
}

AttemptLog::AttemptLog(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_ / "windows");
  for (const auto& a : read_log(log_path())) timestamps_.insert(a.timestamp);
}

void AttemptLog::append(GraspAttempt attempt, const image::WindowImage& window) {
  std::lock_guard lock(mu_);
  if (timestamps_.count(attempt.timestamp)) throw DuplicateTimestamp("duplicate timestamp " + attempt.timestamp);
  const auto bytes = encode_window(window);
  attempt.window_hash = window_hash(bytes);
  const auto path = dir_ / "windows" / (attempt.window_hash + ".hm");
  if (!std::filesystem::exists(path)) {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream w(tmp, std::ios::binary | std::ios::trunc);
      w.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!w) throw std::runtime_error("cannot write window " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }
  const std::string line = format_record(attempt) + '\n';
  std::ofstream log(log_path(), std::ios::binary | std::ios::app);
  log.write(line.data(), static_cast<std::streamsize>(line.size()));
  log.flush();
  if (!log) throw std::runtime_error("cannot append to " + log_path().string());
  timestamps_.insert(attempt.timestamp);
}

std::vector<GraspAttempt> AttemptLog::load_all() const {
  std::lock_guard lock(mu_);
  return read_log(log_path());
}

image::WindowImage AttemptLog::load_window(const std::string& hash) const {
  const auto path = dir_ / "windows" / (hash + ".hm");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CorruptRecord("missing window " + hash);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (window_hash(bytes) != hash) throw CorruptRecord("window content does not match its hash " + hash);
  return decode_window(bytes);
}

std::size_t AttemptLog::size() const {
  std::lock_guard lock(mu_);
  return timestamps_.size();
}

std::vector<double> balance_weights(std::span<const int> rewards) {
  const std::size_t n = rewards.size();
  const auto pos = static_cast<std::size_t>(std::count(rewards.begin(), rewards.end(), 1));
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw SingleClassError("class balancing needs both rewards present");
  const double cp = static_cast<double>(n) / (2.0 * pos);
  const double cn = static_cast<double>(n) / (2.0 * neg);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = rewards[i] ? cp : cn;
  return w;
}

std::vector<double> asymmetry_weights(std::span<const int> rewards, double kappa) {
  if (!(kappa >= 1.0)) throw std::invalid_argument("asymmetry kappa must be >= 1");
  std::vector<double> w(rewards.size());
  if (w.empty()) return w;
  double sum = 0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] = rewards[i] ? 1.0 : kappa;
  const double scale = static_cast<double>(w.size()) / sum;
  for (auto& v : w) v *= scale;
  return w;
}

std::vector<double> product_weights(std::span<const int> rewards, double kappa) {
  auto w = balance_weights(rewards);
  const auto a = asymmetry_weights(rewards, kappa);
  double sum = 0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] *= a[i];
  const double scale = static_cast<double>(w.size()) / sum;
  for (auto& v : w) v *= scale;
  return w;
}

std::vector<double> retrain_weights(std::span<const int> rewards, std::span<const double> psi) {
  if (rewards.size() != psi.size()) throw std::invalid_argument("rewards and predictions differ in length");
  const std::size_t n = rewards.size();
  std::vector<double> agree(n);
  long double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    agree[i] = 1.0 - std::abs(static_cast<double>(rewards[i]) - psi[i]);
    sum += agree[i];
  }
  if (!(sum > 0)) throw std::invalid_argument("every prediction contradicts its reward; weights undefined");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(static_cast<long double>(n) * agree[i] / sum);
  return w;
}

}  // namespace grasplab::dataset
