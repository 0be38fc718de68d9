#include "glia/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "glia/errors.hpp"

namespace glia {
namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  put_u8(out, static_cast<std::uint8_t>(v & 0xff));
  put_u8(out, static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    put_u8(out, static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw PayloadError(origin_ + ": truncated weight file at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (std::uint16_t{u8()} << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t{u8()} << (8 * i);
    }
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_weights(const std::vector<NamedTensor>& tensors) {
  std::string out = "GLIA";
  put_u32(out, kWeightFileVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    if (nt.name.size() > 0xffff) {
      throw FormatError("tensor name too long: " + nt.name.substr(0, 32) + "...");
    }
    if (nt.tensor.rank() > 0xff) {
      throw FormatError("tensor rank too large for " + nt.name);
    }
    put_u16(out, static_cast<std::uint16_t>(nt.name.size()));
    out += nt.name;
    put_u8(out, static_cast<std::uint8_t>(nt.tensor.rank()));
    for (auto d : nt.tensor.shape()) {
      put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : nt.tensor.data()) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

std::vector<NamedTensor> decode_weights(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "GLIA") != 0) {
    throw FormatError(origin + ": not a weight file (bad magic)");
  }
  Reader r(bytes, origin);
  r.str(4);
  const auto version = r.u32();
  if (version != kWeightFileVersion) {
    throw FormatError(origin + ": unsupported weight file version " + std::to_string(version));
  }
  const auto count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = r.u16();
    std::string name = r.str(name_len);
    const auto rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) {
      d = r.u32();
    }
    const std::size_t n = shape_numel(shape);
    if (n > r.remaining() / 4) {
      throw PayloadError(origin + ": truncated weight file inside tensor " + name);
    }
    std::vector<double> values(n);
    for (auto& v : values) {
      v = static_cast<double>(std::bit_cast<float>(r.u32()));
    }
    out.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values),
                                                 Precision::f32)});
  }
  if (r.remaining() != 0) {
    throw FormatError(origin + ": trailing bytes after last tensor");
  }
  return out;
}

void write_weights(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const std::string bytes = encode_weights(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write weights " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

std::vector<NamedTensor> read_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open weights " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes, path.string());
}

void assign_weights(const std::vector<NamedTensor>& loaded, std::vector<NamedTensor>& targets,
                    const std::vector<std::string>& ignore_prefixes) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& nt : loaded) {
    by_name[nt.name] = &nt.tensor;
  }
  // Check everything before touching any target.
  for (const auto& t : targets) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) {
      throw ShapeMismatchError("weights are missing tensor " + t.name);
    }
    if (it->second->shape() != t.tensor.shape()) {
      throw ShapeMismatchError("tensor " + t.name + " has shape " +
                               shape_str(it->second->shape()) + ", config expects " +
                               shape_str(t.tensor.shape()));
    }
  }
  if (loaded.size() != targets.size()) {
    std::map<std::string, bool> wanted;
    for (const auto& t : targets) {
      wanted[t.name] = true;
    }
    for (const auto& nt : loaded) {
      if (wanted.count(nt.name) != 0) {
        continue;
      }
      bool ignored = false;
      for (const auto& p : ignore_prefixes) {
        ignored = ignored || nt.name.rfind(p, 0) == 0;
      }
      if (!ignored) {
        throw ShapeMismatchError("weights contain unexpected tensor " + nt.name);
      }
    }
  }
  for (auto& t : targets) {
    const Tensor* src = by_name[t.name];
    auto dst = t.tensor.mutable_data();
    std::copy(src->data().begin(), src->data().end(), dst.begin());
    quantize(dst, t.tensor.precision());
  }
}

Tensor text_to_tensor(const std::string& text) {
  std::vector<double> values;
  values.reserve(text.size());
  for (char c : text) {
    values.push_back(static_cast<double>(static_cast<unsigned char>(c)));
  }
  return Tensor::from({text.size()}, std::move(values), Precision::f32);
}

std::string tensor_to_text(const Tensor& t) {
  std::string out;
  out.reserve(t.numel());
  for (double v : t.data()) {
    if (v < 0.0 || v > 255.0 || v != static_cast<double>(static_cast<int>(v))) {
      throw FormatError("metadata tensor holds a non-byte value");
    }
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

std::uint64_t checksum(const std::vector<NamedTensor>& tensors) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& nt : tensors) {
    mix(nt.name.data(), nt.name.size());
    for (auto d : nt.tensor.shape()) {
      const auto d64 = static_cast<std::uint64_t>(d);
      mix(&d64, sizeof d64);
    }
    for (double v : nt.tensor.data()) {
      // Full double bits, so an f64 buffer change below float resolution still shows.
      const auto bits = std::bit_cast<std::uint64_t>(v);
      mix(&bits, sizeof bits);
    }
  }
  return h;
}

}  // namespace glia
