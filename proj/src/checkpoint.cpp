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

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "error.hpp"

namespace hetsl {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'L', 'C'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string &s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  std::string &buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string &data) : data_(data) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes() {
    const std::size_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCode::kTruncated, "checkpoint: unexpected end of file");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string &data_;
  std::size_t pos_ = 8;
};

}  // namespace

std::string model_shape_text(const ModelShape &s) {
  std::ostringstream os;
  os << "image_size=" << s.image_size << "\n"
     << "conv_filters=" << s.conv_filters << "\n"
     << "camera_hidden=" << s.camera_hidden << "\n"
     << "rss_hidden=" << s.rss_hidden << "\n"
     << "fc_units=" << s.fc_units << "\n"
     << "n_rss=" << s.n_rss << "\n"
     << "kernel=" << s.kernel << "\n";
  return os.str();
}

ModelShape parse_model_shape_text(const std::string &text) {
  ModelShape s;
  const std::map<std::string, std::size_t *> fields{
      {"image_size", &s.image_size}, {"conv_filters", &s.conv_filters},
      {"camera_hidden", &s.camera_hidden}, {"rss_hidden", &s.rss_hidden},
      {"fc_units", &s.fc_units}, {"n_rss", &s.n_rss}, {"kernel", &s.kernel}};
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kFormat, "model shape: missing '=' in " + line);
    auto it = fields.find(line.substr(0, eq));
    if (it == fields.end()) fail(ErrorCode::kFormat, "model shape: unknown key " + line.substr(0, eq));
    try {
      *it->second = std::stoull(line.substr(eq + 1));
    } catch (const std::logic_error &) {
      fail(ErrorCode::kFormat, "model shape: bad value in " + line);
    }
  }
  s.validate();
  return s;
}

void save_checkpoint(SplitModel &model, const std::filesystem::path &path) {
  Writer w;
  w.buffer().append(kMagic, 4);
  w.buffer().push_back(static_cast<char>(kCheckpointFormatVersion));
  w.buffer().append(3, '\0');
  w.bytes(model.config().to_text());
  w.bytes(model_shape_text(model.shape()));
  auto state = model.state();
  Tensor scaler({2}, std::vector<double>{model.scaler.offset_dbm, model.scaler.scale_db});
  state.push_back({"power_scaler", &scaler});
  w.u32(static_cast<std::uint32_t>(state.size()));
  for (const NamedTensorRef &t : state) {
    w.bytes(t.name);
    w.u32(static_cast<std::uint32_t>(t.tensor->rank()));
    for (std::size_t d : t.tensor->shape()) w.u64(d);
    for (double v : t.tensor->values()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::unique_ptr<SplitModel> load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  const std::string data = os.str();
  if (data.size() < 8 || std::memcmp(data.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kFormat, path.string() + ": not a checkpoint");
  }
  if (static_cast<std::uint8_t>(data[4]) != kCheckpointFormatVersion) {
    fail(ErrorCode::kVersion, path.string() + ": checkpoint version " +
                                  std::to_string(static_cast<int>(static_cast<std::uint8_t>(data[4]))));
  }
  Reader r(data);
  const StrategyConfig cfg = parse_strategy_text(r.bytes());
  const ModelShape shape = parse_model_shape_text(r.bytes());
  auto model = std::make_unique<SplitModel>(cfg, shape, 0);

  std::map<std::string, Tensor *> slots;
  for (const NamedTensorRef &t : model->state()) slots[t.name] = t.tensor;
  Tensor scaler({2});
  slots["power_scaler"] = &scaler;

  const std::uint32_t count = r.u32();
  if (count != slots.size()) {
    fail(ErrorCode::kFormat, path.string() + ": holds " + std::to_string(count) +
                                 " tensors, model expects " + std::to_string(slots.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes();
    auto it = slots.find(name);
    if (it == slots.end()) fail(ErrorCode::kFormat, path.string() + ": unexpected tensor " + name);
    Shape dims(r.u32());
    for (auto &d : dims) d = r.u64();
    if (dims != it->second->shape()) {
      fail(ErrorCode::kFormat, path.string() + ": tensor " + name + " has shape " + shape_str(dims) +
                                   ", model expects " + shape_str(it->second->shape()));
    }
    for (double &v : it->second->values()) v = r.f64();
    slots.erase(it);
  }
  if (!r.done()) fail(ErrorCode::kFormat, path.string() + ": trailing bytes");
  model->scaler = {scaler[0], scaler[1]};
  return model;
}

}  // namespace hetsl
