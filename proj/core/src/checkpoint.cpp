#include "faor/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "faor/errors.hpp"

namespace faor {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw InputError("checkpoint is truncated");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const CheckpointEntry* Checkpoint::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string out(kCheckpointTag);
  put_u32(out, static_cast<std::uint32_t>(ckpt.config_text.size()));
  out += ckpt.config_text;
  put_u32(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (ad::shape_numel(e.shape) != e.values.size()) {
      throw InputError("checkpoint entry '" + e.name + "' has inconsistent shape");
    }
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (int d : e.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : e.values) put_f32(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw InputError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));
  if (r.text(kCheckpointTag.size()) != kCheckpointTag) {
    throw InputError(path.string() + " is not a faor-ckpt-v1 checkpoint");
  }
  Checkpoint ckpt;
  ckpt.config_text = r.text(r.u32());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.text(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw InputError("checkpoint entry '" + e.name + "' has rank " + std::to_string(rank));
    for (std::uint32_t k = 0; k < rank; ++k) e.shape.push_back(static_cast<int>(r.u32()));
    const std::size_t n = ad::shape_numel(e.shape);
    e.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) e.values[k] = r.f32();
    ckpt.entries.push_back(std::move(e));
  }
  if (!r.done()) throw InputError("trailing bytes after the last checkpoint entry");
  return ckpt;
}

template <typename T>
Checkpoint make_checkpoint(std::string config_text, const ad::ParameterSet<T>& params) {
  Checkpoint ckpt;
  ckpt.config_text = std::move(config_text);
  for (const auto& p : params) {
    CheckpointEntry e;
    e.name = p.name;
    e.shape = p.tensor.shape();
    e.values.assign(p.tensor.data().begin(), p.tensor.data().end());
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

template <typename T>
void load_parameters(const Checkpoint& ckpt, const ad::ParameterSet<T>& params) {
  for (const auto& p : params) {
    const CheckpointEntry* e = ckpt.find(p.name);
    if (e == nullptr) throw InputError("checkpoint lacks parameter '" + p.name + "'");
    if (e->shape != p.tensor.shape()) {
      throw InputError("parameter '" + p.name + "' has shape " + ad::shape_string(e->shape) +
                       " in the checkpoint but " + ad::shape_string(p.tensor.shape()) +
                       " in the model");
    }
    ad::Tensor<T> t = p.tensor;
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(e->values[i]);
  }
}

template Checkpoint make_checkpoint<float>(std::string, const ad::ParameterSet<float>&);
template Checkpoint make_checkpoint<double>(std::string, const ad::ParameterSet<double>&);
template void load_parameters<float>(const Checkpoint&, const ad::ParameterSet<float>&);
template void load_parameters<double>(const Checkpoint&, const ad::ParameterSet<double>&);

}  // namespace faor
