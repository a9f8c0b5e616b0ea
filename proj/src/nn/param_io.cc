#include "eventshift/nn/param_io.h"

#include "eventshift/error.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace eventshift::nn {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'P', 'A', 'R', 'M', '0', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated parameter file");
  return v;
}

}  // namespace

void save_params(const ParamList& params, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, params.size());
  for (const Parameter* p : params) {
    put<std::uint64_t>(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::int64_t>(out, p->value.rows());
    put<std::int64_t>(out, p->value.cols());
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

void load_params(const ParamList& params, const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not a parameter file: " + file.string());
  const auto count = get<std::uint64_t>(in);
  std::map<std::string, Matrix> stored;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint64_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ParseError("truncated parameter file: " + file.string());
    stored.emplace(std::move(name), std::move(m));
  }
  for (Parameter* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw IntegrityError("parameter missing from checkpoint: " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw IntegrityError("parameter shape mismatch: " + p->name);
    p->value = it->second;
    p->zero_grad();
  }
}

Snapshot snapshot(const ParamList& params) {
  Snapshot s;
  s.reserve(params.size());
  for (const Parameter* p : params) s.push_back(p->value);
  return s;
}

void restore(const ParamList& params, const Snapshot& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

bool equals_snapshot(const ParamList& params, const Snapshot& snap) {
  if (params.size() != snap.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& a = params[i]->value;
    const Matrix& b = snap[i];
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace eventshift::nn
