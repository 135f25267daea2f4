/* Copyright 2026 The mtctc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mtctc/checkpoint.hpp"

#include <cstring>

#include "mtctc/error.hpp"
#include "mtctc/image.hpp"

namespace mtctc {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'C', 'T', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void Put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void PutBytes(const void* p, size_t n) { out_.append(static_cast<const char*>(p), n); }
  void PutString(const std::string& s) {
    Put<uint32_t>(static_cast<uint32_t>(s.size()));
    out_ += s;
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void GetBytes(void* dst, size_t n) {
    Need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == end_; }

 private:
  void Need(size_t n) const {
    if (n > end_ - pos_) throw Error(ErrorKind::kParse, "truncated checkpoint");
  }
  const std::string& bytes_;
  size_t end_;
  size_t pos_ = 0;
};

}  // namespace

template <typename Scalar>
std::string SerializeCheckpoint(const Model<Scalar>& model) {
  Writer w;
  w.PutBytes(kMagic, sizeof(kMagic));
  w.Put<uint32_t>(kCheckpointVersion);
  w.Put<uint32_t>(sizeof(Scalar));
  w.Put<uint64_t>(model.config().Hash());
  w.Put<uint64_t>(model.label_map_hash);
  w.Put<uint64_t>(model.step);
  w.Put<int32_t>(model.epoch);
  w.PutString(model.config().Serialize());
  w.Put<uint32_t>(static_cast<uint32_t>(model.params().size()));
  for (const auto& t : model.params()) {
    w.PutString(t.name);
    w.Put<uint32_t>(static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) w.Put<int32_t>(d);
    w.Put<uint64_t>(t.data.size());
    w.PutBytes(t.data.data(), t.data.size() * sizeof(Scalar));
  }
  const uint32_t crc = Crc32(w.str());
  w.Put<uint32_t>(crc);
  return std::move(w.str());
}

template <typename Scalar>
Model<Scalar> ParseCheckpoint(const std::string& bytes,
                              const CheckpointExpectations& expect) {
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kParse, "not a checkpoint file");
  }
  Reader r(bytes, bytes.size() - 4);
  char magic[8];
  r.GetBytes(magic, sizeof(magic));
  const uint32_t version = r.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kVersion, "checkpoint format " + std::to_string(version) +
                                         ", expected " +
                                         std::to_string(kCheckpointVersion));
  }
  uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (Crc32(bytes.substr(0, bytes.size() - 4)) != stored_crc) {
    throw Error(ErrorKind::kChecksum, "checkpoint is corrupt");
  }
  const uint32_t scalar_bytes = r.Get<uint32_t>();
  if (scalar_bytes != sizeof(Scalar)) {
    throw Error(ErrorKind::kConfigMismatch,
                "checkpoint stores " + std::to_string(8 * scalar_bytes) +
                    "-bit parameters");
  }
  const uint64_t config_hash = r.Get<uint64_t>();
  const uint64_t map_hash = r.Get<uint64_t>();
  const uint64_t step = r.Get<uint64_t>();
  const int32_t epoch = r.Get<int32_t>();
  const ModelConfig cfg = ModelConfig::Parse(r.GetString());
  if (cfg.Hash() != config_hash) {
    throw Error(ErrorKind::kChecksum, "checkpoint config hash mismatch");
  }
  if (expect.label_map_hash && *expect.label_map_hash != map_hash) {
    throw Error(ErrorKind::kConfigMismatch,
                "checkpoint was trained with a different label map");
  }
  if (expect.aux_head && *expect.aux_head != cfg.aux_head) {
    throw Error(ErrorKind::kConfigMismatch,
                cfg.aux_head ? "checkpoint has a row head (proposed mode)"
                             : "checkpoint has no row head (baseline mode)");
  }

  Model<Scalar> model = Model<Scalar>::Init(cfg);
  const uint32_t count = r.Get<uint32_t>();
  if (count != model.params().size()) {
    throw Error(ErrorKind::kParse, "checkpoint tensor count mismatch");
  }
  for (auto& t : model.params()) {
    const std::string name = r.GetString();
    const uint32_t rank = r.Get<uint32_t>();
    std::vector<int> shape(rank);
    for (int& d : shape) d = r.Get<int32_t>();
    const uint64_t n = r.Get<uint64_t>();
    if (name != t.name || shape != t.shape || n != t.data.size()) {
      throw Error(ErrorKind::kParse, "checkpoint tensor '" + name +
                                         "' does not match the config");
    }
    r.GetBytes(t.data.data(), n * sizeof(Scalar));
  }
  if (!r.done()) throw Error(ErrorKind::kParse, "trailing bytes in checkpoint");
  model.step = step;
  model.epoch = epoch;
  model.label_map_hash = map_hash;
  return model;
}

template <typename Scalar>
void SaveCheckpoint(const Model<Scalar>& model, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  WriteFileBytes(tmp, SerializeCheckpoint(model));
  std::filesystem::rename(tmp, path);
}

template <typename Scalar>
Model<Scalar> LoadCheckpoint(const std::filesystem::path& path,
                             const CheckpointExpectations& expect) {
  try {
    return ParseCheckpoint<Scalar>(ReadFileBytes(path), expect);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

template std::string SerializeCheckpoint(const Model<float>&);
template std::string SerializeCheckpoint(const Model<double>&);
template Model<float> ParseCheckpoint(const std::string&, const CheckpointExpectations&);
template Model<double> ParseCheckpoint(const std::string&, const CheckpointExpectations&);
template void SaveCheckpoint(const Model<float>&, const std::filesystem::path&);
template void SaveCheckpoint(const Model<double>&, const std::filesystem::path&);
template Model<float> LoadCheckpoint(const std::filesystem::path&, const CheckpointExpectations&);
template Model<double> LoadCheckpoint(const std::filesystem::path&, const CheckpointExpectations&);

}  // namespace mtctc
