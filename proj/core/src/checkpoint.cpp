#include "vlut/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vlut {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_mat(std::string& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double d = m(r, c);
      char bytes[sizeof(double)];
      std::memcpy(bytes, &d, sizeof(double));
      out.append(bytes, sizeof(double));
    }
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Mat mat(std::uint32_t rows, std::uint32_t cols) {
    std::size_t n = static_cast<std::size_t>(rows) * cols;
    need(n * sizeof(double));
    Mat m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        double d;
        std::memcpy(&d, data_.data() + pos_, sizeof(double));
        pos_ += sizeof(double);
        m(r, c) = d;
      }
    return m;
  }

  bool exhausted() const { return pos_ == data_.size(); }
  const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n)
      throw std::runtime_error("checkpoint: truncated file: " + path_);
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const ParamRegistry& reg, const TrackerConfig& cfg,
                           std::uint64_t step) {
  Checkpoint ck;
  ck.config_text = serialize_config(cfg);
  ck.step = step;
  ck.seed = cfg.seed;
  ck.params.reserve(reg.size());
  for (const auto& p : reg.items()) ck.params.emplace_back(p->name, p->value);
  return ck;
}

void restore_registry(const Checkpoint& ck, ParamRegistry& reg) {
  if (ck.params.size() != reg.size())
    throw std::runtime_error("checkpoint: stores " + std::to_string(ck.params.size()) +
                             " parameters but the model has " + std::to_string(reg.size()));
  for (const auto& [name, value] : ck.params) {
    Parameter* p = reg.find(name);
    if (!p) throw std::runtime_error("checkpoint: parameter '" + name + "' does not exist in the model");
    if (p->value.rows() != value.rows() || p->value.cols() != value.cols())
      throw std::runtime_error("checkpoint: parameter '" + name + "' has shape [" +
                               std::to_string(value.rows()) + "," + std::to_string(value.cols()) +
                               "] but the model expects [" + std::to_string(p->value.rows()) + "," +
                               std::to_string(p->value.cols()) + "]");
    p->value = value;
  }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  if (ck.has_optimizer &&
      (ck.adam.m.size() != ck.params.size() || ck.adam.v.size() != ck.params.size()))
    throw std::runtime_error("checkpoint: optimizer moments do not cover every parameter");

  std::string out;
  out += kCheckpointMagic;
  out.push_back('\n');
  if (ck.config_text.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::runtime_error("checkpoint: config text too large");
  put_u32(out, static_cast<std::uint32_t>(ck.config_text.size()));
  out += ck.config_text;
  put_u64(out, ck.step);
  put_u64(out, ck.seed);
  put_u32(out, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, value] : ck.params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(value.rows()));
    put_u32(out, static_cast<std::uint32_t>(value.cols()));
    put_mat(out, value);
  }
  out.push_back(ck.has_optimizer ? 1 : 0);
  if (ck.has_optimizer) {
    put_u64(out, ck.adam.step);
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      const Mat& value = ck.params[i].second;
      if (ck.adam.m[i].rows() != value.rows() || ck.adam.m[i].cols() != value.cols() ||
          ck.adam.v[i].rows() != value.rows() || ck.adam.v[i].cols() != value.cols())
        throw std::runtime_error("checkpoint: optimizer moment shape mismatch for '" +
                                 ck.params[i].first + "'");
      put_mat(out, ck.adam.m[i]);
      put_mat(out, ck.adam.v[i]);
    }
  }

  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed: " + tmp);
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: cannot move into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string data;
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    data = ss.str();
  }

  ByteReader r(std::move(data), path);
  std::string magic = r.bytes(std::strlen(kCheckpointMagic) + 1);
  if (magic != std::string(kCheckpointMagic) + "\n")
    throw std::runtime_error("checkpoint: not a recognized checkpoint file: " + path);

  Checkpoint ck;
  ck.config_text = r.bytes(r.u32());
  ck.step = r.u64();
  ck.seed = r.u64();
  std::uint32_t n = r.u32();
  ck.params.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.bytes(r.u32());
    std::uint32_t rows = r.u32();
    std::uint32_t cols = r.u32();
    ck.params.emplace_back(std::move(name), r.mat(rows, cols));
  }
  std::string flag = r.bytes(1);
  ck.has_optimizer = flag[0] != 0;
  if (ck.has_optimizer) {
    ck.adam.step = r.u64();
    ck.adam.m.reserve(n);
    ck.adam.v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const Mat& value = ck.params[i].second;
      auto rows = static_cast<std::uint32_t>(value.rows());
      auto cols = static_cast<std::uint32_t>(value.cols());
      ck.adam.m.push_back(r.mat(rows, cols));
      ck.adam.v.push_back(r.mat(rows, cols));
    }
  }
  if (!r.exhausted())
    throw std::runtime_error("checkpoint: trailing bytes after payload: " + path);
  return ck;
}

}  // namespace vlut
