#include "ser/net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ser::net {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const unsigned char> bytes, const std::string& label) : bytes_(bytes), label_(label) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("truncated " + label_);
  }
  std::span<const unsigned char> bytes_;
  std::string label_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const ParameterSet<float>& params) {
  std::vector<unsigned char> out{'S', 'E', 'R', 'M'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& t : params) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(t.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(t.value.data()[i]));
  }
  return out;
}

void decode_checkpoint_into(std::span<const unsigned char> bytes, ParameterSet<float>& params,
                            const std::string& label) {
  Reader in(bytes, label);
  if (in.str(4) != "SERM") throw DataError("not a model checkpoint: " + label);
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version in " + label);
  const std::uint32_t n = in.u32();
  if (n != params.size()) {
    throw DataError(label + " holds " + std::to_string(n) + " tensors, model has " + std::to_string(params.size()));
  }
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::string name = in.str(in.u32());
    Tensor<float>* t = params.find(name);
    if (!t) throw DataError(label + " holds unknown tensor '" + name + "'");
    const std::uint32_t rank = in.u32();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = in.u32();
    if (rank != 2 || dims[0] != t->value.rows() || dims[1] != t->value.cols()) {
      throw DataError(label + ": shape mismatch for tensor '" + name + "'");
    }
    for (Eigen::Index i = 0; i < t->value.size(); ++i) t->value.data()[i] = std::bit_cast<float>(in.u32());
  }
  if (!in.done()) throw DataError("trailing bytes in " + label);
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet<float>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  decode_checkpoint_into(bytes, params, path.string());
}

}  // namespace ser::net
