#include "mcqf/core/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mcqf/core/errors.hpp"
#include "mcqf/core/hash.hpp"

namespace mcqf {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace {

constexpr char kMagic[8] = {'M', 'C', 'Q', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end, std::string path) : buf_(buf), end_(end), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, buf_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }
  void seek(std::size_t p) {
    pos_ = 0;
    need(p);
    pos_ = p;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) {
      throw CheckpointError(path_ + ": truncated checkpoint (needed " + std::to_string(n) + " bytes at offset " +
                            std::to_string(pos_) + ")");
    }
  }

  const std::string& buf_;
  std::size_t end_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Checkpoint::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return {};
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const Metadata& metadata) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [k, v] : metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint64_t>(out, params.size());
  for (const auto& [name, t] : params.entries()) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put<double>(out, v);
  }
  put<std::uint64_t>(out, fnv1a64(out));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(where + ": not a checkpoint (bad magic or truncated header)");
  }
  const std::size_t body = buf.size() - 8;
  Reader trailer(buf, buf.size(), where);
  trailer.seek(body);
  if (trailer.get<std::uint64_t>() != fnv1a64(std::string_view(buf.data(), body))) {
    throw CheckpointError(where + ": checksum mismatch (file truncated or corrupted)");
  }
  Reader r(buf, body, where);
  r.seek(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(where + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.get_string();
    std::string v = r.get_string();
    ck.metadata.emplace_back(std::move(k), std::move(v));
  }
  const auto n_params = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    if (rank == 0 || shape_numel(shape) == 0 || shape_numel(shape) > r.remaining() / sizeof(double)) {
      throw CheckpointError(where + ": invalid shape for parameter '" + name + "'");
    }
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = r.get<double>();
    ck.params.add(name, Tensor(shape, std::move(values)));
  }
  if (r.pos() != body) throw CheckpointError(where + ": trailing bytes after parameter table");
  return ck;
}

void restore_params(const Checkpoint& ckpt, ParamStore& target) {
  for (const auto& [name, t] : target.entries()) {
    if (!ckpt.params.contains(name)) throw CompatibilityError("checkpoint lacks parameter '" + name + "'");
    const auto& src = ckpt.params.at(name);
    if (src.shape() != t.shape()) {
      throw CompatibilityError("parameter '" + name + "' has shape " + shape_str(src.shape()) +
                               " in checkpoint, expected " + shape_str(t.shape()));
    }
  }
  target.copy_values_from(ckpt.params);
}

}  // namespace mcqf
