// Copyright 2026 The vidstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidstyle/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vidstyle/error.hpp"

namespace vidstyle {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

// Value text of a key in the header dict literal, up to the next top-level ','
// or '}'.
std::string_view dict_value(std::string_view header, std::string_view key) {
  std::string quoted = "'" + std::string(key) + "'";
  std::size_t pos = header.find(quoted);
  if (pos == std::string_view::npos) {
    throw FormatError("npy header lacks '" + std::string(key) + "'");
  }
  pos += quoted.size();
  skip_ws(header, pos);
  if (pos >= header.size() || header[pos] != ':') throw FormatError("npy header malformed");
  ++pos;
  skip_ws(header, pos);
  std::size_t end = pos;
  int depth = 0;
  while (end < header.size()) {
    const char c = header[end];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
    ++end;
  }
  return header.substr(pos, end - pos);
}

Shape parse_shape(std::string_view v) {
  // v looks like "(2, 3)" / "(5,)" / "()"
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
  if (v.size() < 2 || v.front() != '(' || v.back() != ')') {
    throw FormatError("npy shape malformed: " + std::string(v));
  }
  Shape shape;
  std::size_t i = 1;
  while (i + 1 < v.size()) {
    skip_ws(v, i);
    if (i + 1 >= v.size()) break;
    if (!std::isdigit(static_cast<unsigned char>(v[i]))) {
      throw FormatError("npy shape malformed: " + std::string(v));
    }
    std::size_t n = 0;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) {
      n = n * 10 + static_cast<std::size_t>(v[i] - '0');
      ++i;
    }
    shape.push_back(n);
    skip_ws(v, i);
    if (i < v.size() && v[i] == ',') ++i;
  }
  return shape;
}

std::string header_dict(const Shape& shape, Dtype dtype) {
  std::ostringstream os;
  os << "{'descr': '" << (dtype == Dtype::f64 ? "<f8" : "<f4")
     << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << "), }";
  return os.str();
}

}  // namespace

Tensor parse_npy(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 6) != kMagic) throw FormatError("not an npy file");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) |
                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    prefix = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw FormatError("npy header truncated");
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 8, 4);
    header_len = len;
    prefix = 12;
  } else {
    throw FormatError("unsupported npy version " + std::to_string(major));
  }
  if (bytes.size() < prefix + header_len) throw FormatError("npy header truncated");
  const std::string_view header = bytes.substr(prefix, header_len);

  std::string_view descr = dict_value(header, "descr");
  if (descr.size() < 2 || (descr.front() != '\'' && descr.front() != '"')) {
    throw FormatError("npy descr malformed");
  }
  descr = descr.substr(1, descr.find_last_of("'\"") - 1);
  Dtype dtype;
  if (descr == "<f8") {
    dtype = Dtype::f64;
  } else if (descr == "<f4") {
    dtype = Dtype::f32;
  } else {
    throw FormatError("unsupported npy dtype '" + std::string(descr) + "' (need <f4 or <f8)");
  }

  std::string_view fortran = dict_value(header, "fortran_order");
  if (fortran.find("True") != std::string_view::npos) {
    throw FormatError("Fortran-order npy arrays are not supported");
  }
  if (fortran.find("False") == std::string_view::npos) throw FormatError("npy fortran_order malformed");

  Shape shape = parse_shape(dict_value(header, "shape"));
  const std::size_t n = shape_numel(shape);
  const std::size_t item = dtype == Dtype::f64 ? 8 : 4;
  const std::string_view payload = bytes.substr(prefix + header_len);
  if (payload.size() < n * item) {
    throw FormatError("npy payload short: expected " + std::to_string(n * item) + " bytes, got " +
                      std::to_string(payload.size()));
  }
  if (payload.size() > n * item) throw FormatError("npy payload has trailing bytes");

  std::vector<double> data(n);
  if (dtype == Dtype::f64) {
    std::memcpy(data.data(), payload.data(), n * 8);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, payload.data() + i * 4, 4);
      data[i] = static_cast<double>(f);
    }
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor read_npy(const std::filesystem::path& path) {
  try {
    return parse_npy(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string encode_npy(const Tensor& t, Dtype dtype) {
  std::string dict = header_dict(t.shape(), dtype);
  // magic(6) + version(2) + len(2 or 4) + dict + padding + '\n' is a multiple of 64
  std::size_t prefix = 10;
  std::size_t total = prefix + dict.size() + 1;
  std::size_t padded = (total + 63) / 64 * 64;
  bool v2 = padded - prefix > 65535;
  if (v2) {
    prefix = 12;
    total = prefix + dict.size() + 1;
    padded = (total + 63) / 64 * 64;
  }
  dict.append(padded - total, ' ');
  dict.push_back('\n');

  std::string out;
  out.reserve(padded + t.size() * 8);
  out.append(kMagic);
  out.push_back(static_cast<char>(v2 ? 2 : 1));
  out.push_back('\0');
  const std::size_t hl = dict.size();
  out.push_back(static_cast<char>(hl & 0xFF));
  out.push_back(static_cast<char>((hl >> 8) & 0xFF));
  if (v2) {
    out.push_back(static_cast<char>((hl >> 16) & 0xFF));
    out.push_back(static_cast<char>((hl >> 24) & 0xFF));
  }
  out += dict;
  if (dtype == Dtype::f64) {
    out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * 8);
  } else {
    for (double v : t.data()) {
      const float f = static_cast<float>(v);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  }
  return out;
}

void write_npy(const Tensor& t, const std::filesystem::path& path, Dtype dtype) {
  const std::string bytes = encode_npy(t, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace vidstyle
