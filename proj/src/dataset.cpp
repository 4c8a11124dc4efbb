/**
 * Copyright 2026 The HetSL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "error.hpp"

namespace hetsl {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'L', 'D'};
constexpr std::size_t kHeaderBytes = 20;

std::mt19937_64 noise_stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return std::mt19937_64(seq);
}

void put_u32(std::string &buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::string encode_frames(const std::vector<float> &frames, std::size_t n, std::size_t h,
                          std::size_t w) {
  std::string buf(kMagic, 4);
  buf.push_back(static_cast<char>(kDatasetFormatVersion));
  buf.append(3, '\0');
  put_u32(buf, static_cast<std::uint32_t>(n));
  put_u32(buf, static_cast<std::uint32_t>(h));
  put_u32(buf, static_cast<std::uint32_t>(w));
  buf.reserve(buf.size() + 4 * frames.size());
  for (float f : frames) put_u32(buf, std::bit_cast<std::uint32_t>(f));
  return buf;
}

std::vector<float> decode_frames(const std::string &bytes, const std::string &name,
                                 std::size_t expect_n, std::size_t h, std::size_t w) {
  if (bytes.size() < kHeaderBytes) {
    fail(bytes.size() >= 5 && std::memcmp(bytes.data(), kMagic, 4) == 0 ? ErrorCode::kTruncated
                                                                         : ErrorCode::kFormat,
         name + ": header is " + std::to_string(bytes.size()) + " bytes");
  }
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  if (std::memcmp(p, kMagic, 4) != 0) fail(ErrorCode::kFormat, name + ": bad magic");
  if (p[4] != kDatasetFormatVersion) {
    fail(ErrorCode::kVersion, name + ": format version " + std::to_string(p[4]) +
                                  " (supported: " + std::to_string(kDatasetFormatVersion) + ")");
  }
  const std::size_t n = get_u32(p + 8), fh = get_u32(p + 12), fw = get_u32(p + 16);
  if (n != expect_n || fh != h || fw != w) {
    fail(ErrorCode::kFormat, name + ": header declares " + std::to_string(n) + " frames of " +
                                 std::to_string(fh) + "x" + std::to_string(fw) + ", meta.txt expects " +
                                 std::to_string(expect_n) + " of " + std::to_string(h) + "x" +
                                 std::to_string(w));
  }
  const std::size_t count = n * fh * fw;
  if (bytes.size() < kHeaderBytes + 4 * count) {
    fail(ErrorCode::kTruncated, name + ": payload has " + std::to_string(bytes.size() - kHeaderBytes) +
                                    " bytes, expected " + std::to_string(4 * count));
  }
  if (bytes.size() > kHeaderBytes + 4 * count) fail(ErrorCode::kFormat, name + ": trailing bytes");
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::bit_cast<float>(get_u32(p + kHeaderBytes + 4 * i));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double Dataset::label(std::int64_t k) const {
  const auto idx = static_cast<std::size_t>(k) + look_ahead;
  if (k < 1 || static_cast<std::size_t>(k) > K || idx >= power_dbm.size()) {
    fail(ErrorCode::kRange, "label: sample " + std::to_string(k) + " outside 1.." + std::to_string(K));
  }
  return power_dbm[idx];
}

void Dataset::validate() const {
  if (K == 0) fail(ErrorCode::kShape, "dataset: K must be positive");
  if (frame_ratio < 1) fail(ErrorCode::kShape, "dataset: frame ratio must be positive");
  if (frame_size() == 0) fail(ErrorCode::kShape, "dataset: empty frames");
  const std::size_t c = static_cast<std::size_t>(frame_ratio);
  if (cam_a.size() != (c * K + 1) * frame_size()) {
    fail(ErrorCode::kRange, "dataset: camera A needs " + std::to_string(c * K + 1) + " frames");
  }
  if (cam_b.size() != (K + 1) * frame_size()) {
    fail(ErrorCode::kRange, "dataset: camera B needs " + std::to_string(K + 1) + " frames");
  }
  if (power_dbm.size() != K + look_ahead + 1) {
    fail(ErrorCode::kRange, "dataset: power trace needs " + std::to_string(K + look_ahead + 1) +
                                " samples, has " + std::to_string(power_dbm.size()));
  }
}

Dataset build_dataset(const SceneConfig &cfg) { return build_dataset(cfg, generate_path(cfg)); }

Dataset build_dataset(const SceneConfig &cfg, const ScenePath &scene) {
  cfg.validate();
  Dataset d;
  d.K = cfg.K;
  d.tau_s = cfg.tau_s;
  d.frame_ratio = cfg.frame_ratio;
  d.height = d.width = cfg.image_size;
  d.look_ahead = cfg.look_ahead;
  d.seed = cfg.seed;

  const std::size_t c = static_cast<std::size_t>(cfg.frame_ratio);
  auto render_all = [&](const CameraPose &pose, std::size_t frames, double dt, std::uint32_t id) {
    std::mt19937_64 rng = noise_stream(cfg.seed, id);
    std::vector<float> out;
    out.reserve(frames * d.frame_size());
    for (std::size_t j = 0; j < frames; ++j) {
      const auto img = render_depth(scene, pose, static_cast<double>(j) * dt, cfg.image_size,
                                    cfg.pixel_noise, &rng);
      for (double v : img) out.push_back(static_cast<float>(v));
    }
    return out;
  };
  d.cam_a = render_all(cfg.camera_a, c * cfg.K + 1, cfg.tau_s / static_cast<double>(c), 3);
  d.cam_b = render_all(cfg.camera_b, cfg.K + 1, cfg.tau_s, 4);
  d.power_dbm = synth_power_trace(scene, cfg, cfg.K + cfg.look_ahead + 1);
  d.validate();
  return d;
}

DatasetSplit split_dataset(std::size_t K, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::kInvalidArgument, "split ratio must lie in (0,1)");
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(K)));
  if (n_train == 0 || n_train >= K) {
    fail(ErrorCode::kInvalidArgument, "split of K=" + std::to_string(K) + " leaves an empty side");
  }
  DatasetSplit s;
  for (std::size_t k = 1; k <= K; ++k) {
    (k <= n_train ? s.train : s.test).push_back(static_cast<std::int64_t>(k));
  }
  return s;
}

Batch make_batch(const Dataset &data, std::span<const std::int64_t> ks, const PowerScaler &scaler,
                 std::size_t n_rss) {
  if (ks.empty()) fail(ErrorCode::kInvalidArgument, "make_batch: no samples");
  const std::size_t n = ks.size(), fs = data.frame_size();
  const std::size_t c = static_cast<std::size_t>(data.frame_ratio);
  Batch b;
  b.cam_a = Tensor({n, c + 1, 1, data.height, data.width});
  b.cam_b = Tensor({n, 2, 1, data.height, data.width});
  b.rss = Tensor({n, n_rss});
  b.target = Tensor({n});
  b.k.assign(ks.begin(), ks.end());
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t k = ks[i];
    if (k < 1 || static_cast<std::size_t>(k) > data.K || static_cast<std::size_t>(k) + 1 < n_rss) {
      fail(ErrorCode::kRange, "make_batch: sample " + std::to_string(k) + " has no full window");
    }
    const std::size_t uk = static_cast<std::size_t>(k);
    const float *a = data.cam_a.data() + c * (uk - 1) * fs;
    std::copy(a, a + (c + 1) * fs, b.cam_a.data() + i * (c + 1) * fs);
    const float *bb = data.cam_b.data() + (uk - 1) * fs;
    std::copy(bb, bb + 2 * fs, b.cam_b.data() + i * 2 * fs);
    for (std::size_t r = 0; r < n_rss; ++r) {
      b.rss[i * n_rss + r] = scaler.normalize(data.power_dbm[uk + 1 - n_rss + r]);
    }
    b.target[i] = scaler.normalize(data.label(k));
  }
  return b;
}

void save_dataset(const Dataset &data, const std::filesystem::path &dir) {
  data.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream meta;
  meta << "format_version=" << static_cast<int>(kDatasetFormatVersion) << "\n"
       << "K=" << data.K << "\n"
       << "tau_s=" << fmt_double(data.tau_s) << "\n"
       << "c=" << data.frame_ratio << "\n"
       << "height=" << data.height << "\n"
       << "width=" << data.width << "\n"
       << "look_ahead=" << data.look_ahead << "\n"
       << "seed=" << data.seed << "\n"
       << "cam_a_frames=" << data.cam_a_frames() << "\n"
       << "cam_b_frames=" << data.cam_b_frames() << "\n"
       << "power_samples=" << data.power_dbm.size() << "\n";
  write_file(dir / "meta.txt", meta.str());
  write_file(dir / "cam_a.bin", encode_frames(data.cam_a, data.cam_a_frames(), data.height, data.width));
  write_file(dir / "cam_b.bin", encode_frames(data.cam_b, data.cam_b_frames(), data.height, data.width));
  std::string csv = "k,p_dbm\n";
  for (std::size_t k = 0; k < data.power_dbm.size(); ++k) {
    csv += std::to_string(k) + "," + fmt_double(data.power_dbm[k]) + "\n";
  }
  write_file(dir / "power.csv", csv);
}

Dataset load_dataset(const std::filesystem::path &dir) {
  std::map<std::string, std::string> meta;
  {
    std::istringstream in(read_file(dir / "meta.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::kFormat, "meta.txt: malformed line '" + line + "'");
      meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  auto field = [&](const std::string &key) -> const std::string & {
    auto it = meta.find(key);
    if (it == meta.end()) fail(ErrorCode::kFormat, "meta.txt: missing " + key);
    return it->second;
  };
  auto number = [&](const std::string &key) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(field(key), &used);
      if (used != field(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::logic_error &) {
      fail(ErrorCode::kFormat, "meta.txt: " + key + " is not an unsigned integer");
    }
  };
  if (number("format_version") != kDatasetFormatVersion) {
    fail(ErrorCode::kVersion, "meta.txt: format version " + field("format_version") + " (supported: " +
                                  std::to_string(kDatasetFormatVersion) + ")");
  }
  Dataset d;
  d.K = number("K");
  try {
    d.tau_s = std::stod(field("tau_s"));
  } catch (const std::logic_error &) {
    fail(ErrorCode::kFormat, "meta.txt: tau_s is not a number");
  }
  d.frame_ratio = static_cast<int>(number("c"));
  d.height = number("height");
  d.width = number("width");
  d.look_ahead = number("look_ahead");
  d.seed = number("seed");
  d.cam_a = decode_frames(read_file(dir / "cam_a.bin"), "cam_a.bin", number("cam_a_frames"), d.height, d.width);
  d.cam_b = decode_frames(read_file(dir / "cam_b.bin"), "cam_b.bin", number("cam_b_frames"), d.height, d.width);

  std::istringstream csv(read_file(dir / "power.csv"));
  std::string line;
  if (!std::getline(csv, line) || line != "k,p_dbm") fail(ErrorCode::kFormat, "power.csv: bad header");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    char *end = nullptr;
    if (comma == std::string::npos) fail(ErrorCode::kFormat, "power.csv: bad row '" + line + "'");
    if (line.substr(0, comma) != std::to_string(d.power_dbm.size())) {
      fail(ErrorCode::kFormat, "power.csv: rows out of order at '" + line + "'");
    }
    const double v = std::strtod(line.c_str() + comma + 1, &end);
    if (end == line.c_str() + comma + 1 || *end != '\0') {
      fail(ErrorCode::kFormat, "power.csv: bad value '" + line + "'");
    }
    d.power_dbm.push_back(v);
  }
  if (d.power_dbm.size() < number("power_samples")) {
    fail(ErrorCode::kTruncated, "power.csv: " + std::to_string(d.power_dbm.size()) + " of " +
                                    field("power_samples") + " samples");
  }
  try {
    d.validate();
  } catch (const Error &e) {
    fail(ErrorCode::kFormat, std::string("dataset inconsistent with meta.txt: ") + e.what());
  }
  return d;
}

}  // namespace hetsl
