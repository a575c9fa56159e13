#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mvrbm/model.hpp"

namespace mvrbm {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'R', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) {
      x |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return x;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) {
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return x;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw ModelError("model file truncated");
  }

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const std::string& path, const SavedModel& model) {
  const auto& params = model.params;
  if (model.standardization.size() != params.schema.size()) {
    throw ModelError("standardization record count mismatch");
  }
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);

  put_u32(out, static_cast<std::uint32_t>(params.schema.size()));
  for (const auto& spec : params.schema.variables) {
    put_str(out, spec.name);
    out.push_back(static_cast<char>(kind_index(spec.kind)));
    put_u32(out, static_cast<std::uint32_t>(spec.categories.size()));
    for (const auto& c : spec.categories) put_str(out, c);
  }
  for (const auto& rec : model.standardization) {
    put_f64(out, rec.mean);
    put_f64(out, rec.sd);
  }
  put_u32(out, static_cast<std::uint32_t>(params.hidden_units));
  for (int k = 0; k < params.hidden_units; ++k) put_f64(out, params.hidden_bias[k]);
  for (const auto& vp : params.vars) {
    put_u32(out, static_cast<std::uint32_t>(vp.bias.size()));
    for (int b = 0; b < vp.bias.size(); ++b) put_f64(out, vp.bias[b]);
    for (int b = 0; b < vp.weights.rows(); ++b) {
      for (int k = 0; k < vp.weights.cols(); ++k) put_f64(out, vp.weights(b, k));
    }
    put_f64(out, vp.log_gamma);
    put_f64(out, vp.sigma);
  }

  std::ofstream fh(path, std::ios::binary | std::ios::trunc);
  if (!fh) throw ModelError("cannot open `" + path + "` for writing");
  fh.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!fh) throw ModelError("failed writing `" + path + "`");
}

SavedModel load_model(const std::string& path) {
  std::ifstream fh(path, std::ios::binary);
  if (!fh) throw ModelError("cannot open `" + path + "`");
  std::string data((std::istreambuf_iterator<char>(fh)), std::istreambuf_iterator<char>());
  Reader in(std::move(data));

  char magic[4];
  in.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ModelError("not a model file");
  const std::uint32_t version = in.u32();
  if (version != kVersion) {
    throw ModelError("unsupported model version " + std::to_string(version));
  }

  SavedModel model;
  const std::uint32_t n_vars = in.u32();
  for (std::uint32_t i = 0; i < n_vars; ++i) {
    VariableSpec spec;
    spec.name = in.str();
    char kind_byte;
    in.raw(&kind_byte, 1);
    if (kind_byte < 0 || kind_byte > 5) throw ModelError("bad kind byte");
    spec.kind = static_cast<VarKind>(kind_byte);
    const std::uint32_t n_cats = in.u32();
    for (std::uint32_t c = 0; c < n_cats; ++c) spec.categories.push_back(in.str());
    model.params.schema.variables.push_back(std::move(spec));
  }
  model.standardization.resize(n_vars);
  for (auto& rec : model.standardization) {
    rec.mean = in.f64();
    rec.sd = in.f64();
  }
  const std::uint32_t K = in.u32();
  model.params.hidden_units = static_cast<int>(K);
  model.params.hidden_bias.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) model.params.hidden_bias[k] = in.f64();
  for (std::uint32_t i = 0; i < n_vars; ++i) {
    VarParams vp;
    const std::uint32_t B = in.u32();
    if (B != static_cast<std::uint32_t>(param_block_size(model.params.schema.variables[i]))) {
      throw ModelError("parameter block size mismatch");
    }
    vp.bias.resize(B);
    for (std::uint32_t b = 0; b < B; ++b) vp.bias[b] = in.f64();
    vp.weights.resize(B, K);
    for (std::uint32_t b = 0; b < B; ++b) {
      for (std::uint32_t k = 0; k < K; ++k) vp.weights(b, k) = in.f64();
    }
    vp.log_gamma = in.f64();
    vp.sigma = in.f64();
    model.params.vars.push_back(std::move(vp));
  }
  if (!in.exhausted()) throw ModelError("trailing bytes in model file");
  return model;
}

}  // namespace mvrbm
