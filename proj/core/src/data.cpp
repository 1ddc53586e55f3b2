#include "rjepa/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "rjepa/errors.hpp"
#include "rjepa/linalg.hpp"
#include "rjepa/rng.hpp"

namespace rjepa {

void SequenceDataset::validate() const {
  if (patch_height < 1 || patch_width < 1 || channels < 1)
    throw ValidationError("SequenceDataset: bad patch dims");
  if (!sequences.empty() && T < 2)
    throw ValidationError("SequenceDataset: T must be >= 2 (prediction needs a next step)");
  for (const auto& seq : sequences) {
    if (static_cast<int>(seq.size()) != T)
      throw ValidationError("SequenceDataset: ragged sequence lengths");
    for (const auto& patch : seq) {
      if (static_cast<int>(patch.size()) != patch_dim())
        throw ShapeError("SequenceDataset: patch size mismatch");
      if (!vec_all_finite(patch)) throw NumericError("SequenceDataset: non-finite patch");
    }
  }
}

double spectral_radius_estimate(const Matrix& u, int iters) {
  if (u.rows() != u.cols()) throw ValidationError("spectral_radius_estimate: not square");
  const int n = u.rows();
  Rng rng(0x5eed);
  Vec v(n);
  for (auto& x : v) x = rng.normal();
  double nrm = vec_norm(v);
  if (nrm == 0.0) return 0.0;
  for (auto& x : v) x /= nrm;
  double rho = 0.0;
  for (int it = 0; it < iters; ++it) {
    v = matvec(u, v);
    nrm = vec_norm(v);
    if (nrm < 1e-300) return 0.0;
    rho = nrm;
    for (auto& x : v) x /= nrm;
  }
  return rho;
}

void LatentProcessParams::validate() const {
  if (u.rows() != u.cols()) throw ValidationError("LatentProcessParams: U not square");
  if (sigma.rows() != u.rows() || sigma.cols() != u.cols())
    throw ShapeError("LatentProcessParams: sigma dims mismatch");
  if (relative_error(sigma, sigma.transposed()) > 1e-12 && sigma.max_abs() > 0.0)
    throw ValidationError("LatentProcessParams: sigma not symmetric");
  if (emission.cols() != u.rows())
    throw ShapeError("LatentProcessParams: emission cols != latent dim");
  if (emission.rows() != patch_height * patch_width * channels)
    throw ShapeError("LatentProcessParams: emission rows != patch dim");
  if (spectral_radius_estimate(u) >= 1.0 - 1e-9)
    throw ValidationError("LatentProcessParams: unstable transition (spectral radius >= 1)");
}

namespace {

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Matrix noise_factor(const Matrix& sigma) {
  if (sigma.max_abs() == 0.0) return Matrix(sigma.rows(), sigma.cols());
  return cholesky(sigma);
}

}  // namespace

SequenceDataset gen_latent_sequences(const LatentProcessParams& params, int count, int T,
                                     std::uint64_t seed, std::uint64_t index_offset) {
  params.validate();
  if (count < 0 || (count > 0 && T < 2))
    throw ValidationError("gen_latent_sequences: bad count/T");
  const Matrix chol = noise_factor(params.sigma);
  const int L = params.latent_dim();

  SequenceDataset ds;
  ds.patch_height = params.patch_height;
  ds.patch_width = params.patch_width;
  ds.channels = params.channels;
  ds.T = T;
  ds.seed = seed;
  ds.generator = "latent-ar1";
  ds.sequences.resize(count);

  constexpr int kBurnIn = 100;
  for (int s = 0; s < count; ++s) {
    Rng rng(Rng::substream_seed(seed, index_offset + static_cast<std::uint64_t>(s)));
    Vec z(L, 0.0);
    Vec g(L);
    auto advance = [&]() {
      for (auto& x : g) x = rng.normal();
      Vec next = matvec(params.u, z);
      vec_axpy(next, 1.0, matvec(chol, g));
      z = std::move(next);
    };
    for (int t = 0; t < kBurnIn; ++t) advance();
    auto& seq = ds.sequences[s];
    seq.reserve(T);
    for (int t = 0; t < T; ++t) {
      advance();
      Vec patch = matvec(params.emission, z);
      for (auto& v : patch) v = quantize_f32(v);
      seq.push_back(std::move(patch));
    }
  }
  ds.validate();
  return ds;
}

SequenceDataset gen_scanpath_sequences(int image_size, int count, int T, int patch_size,
                                       std::uint64_t seed, std::uint64_t index_offset) {
  if (patch_size < 1 || patch_size > image_size)
    throw ValidationError("gen_scanpath_sequences: patch must fit inside the image");
  if (count < 0 || (count > 0 && T < 2)) throw ValidationError("gen_scanpath_sequences: bad count/T");

  SequenceDataset ds;
  ds.patch_height = patch_size;
  ds.patch_width = patch_size;
  ds.channels = 1;
  ds.T = T;
  ds.seed = seed;
  ds.generator = "scanpath";
  ds.sequences.resize(count);

  constexpr int kBlobs = 32;
  for (int s = 0; s < count; ++s) {
    Rng rng(Rng::substream_seed(seed, index_offset + static_cast<std::uint64_t>(s)));

    // render one procedural image: sum of oriented Gaussian blobs
    std::vector<double> img(static_cast<std::size_t>(image_size) * image_size, 0.0);
    for (int b = 0; b < kBlobs; ++b) {
      const double cx = rng.uniform(0.0, image_size);
      const double cy = rng.uniform(0.0, image_size);
      const double amp = rng.uniform(0.4, 1.0);
      const double s_major = rng.uniform(0.06, 0.22) * image_size;
      const double s_minor = s_major * rng.uniform(0.3, 1.0);
      const double theta = rng.uniform(0.0, 3.14159265358979323846);
      const double ct = std::cos(theta), st = std::sin(theta);
      for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
          const double dx = x - cx, dy = y - cy;
          const double u = ct * dx + st * dy;
          const double v = -st * dx + ct * dy;
          const double e = 0.5 * (u * u / (s_major * s_major) + v * v / (s_minor * s_minor));
          if (e < 12.0) img[static_cast<std::size_t>(y) * image_size + x] += amp * std::exp(-e);
        }
    }

    // fixation walk: mostly small steps, occasional long saccades
    const double lim = image_size - patch_size;
    double fx = rng.uniform(0.0, lim);
    double fy = rng.uniform(0.0, lim);
    auto& seq = ds.sequences[s];
    seq.reserve(T);
    for (int t = 0; t < T; ++t) {
      if (t > 0) {
        if (rng.uniform() < 0.15) {
          fx = rng.uniform(0.0, lim);
          fy = rng.uniform(0.0, lim);
        } else {
          fx += rng.normal() * patch_size * 0.35;
          fy += rng.normal() * patch_size * 0.35;
          fx = std::clamp(fx, 0.0, lim);
          fy = std::clamp(fy, 0.0, lim);
        }
      }
      const int ix = static_cast<int>(fx);
      const int iy = static_cast<int>(fy);
      Vec patch(static_cast<std::size_t>(patch_size) * patch_size);
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          patch[static_cast<std::size_t>(y) * patch_size + x] =
              quantize_f32(img[static_cast<std::size_t>(iy + y) * image_size + (ix + x)]);
      seq.push_back(std::move(patch));
    }
  }
  ds.validate();
  return ds;
}

double variance_drift_ratio(const SequenceDataset& ds) {
  if (ds.count() == 0 || ds.T < 4) throw ValidationError("variance_drift_ratio: too little data");
  const int half = ds.T / 2;
  double s1 = 0.0, q1 = 0.0, n1 = 0.0, s2 = 0.0, q2 = 0.0, n2 = 0.0;
  for (const auto& seq : ds.sequences)
    for (int t = 0; t < ds.T; ++t)
      for (double v : seq[t]) {
        if (t < half) {
          s1 += v;
          q1 += v * v;
          n1 += 1.0;
        } else {
          s2 += v;
          q2 += v * v;
          n2 += 1.0;
        }
      }
  const double var1 = q1 / n1 - (s1 / n1) * (s1 / n1);
  const double var2 = q2 / n2 - (s2 / n2) * (s2 / n2);
  return var2 / std::max(var1, 1e-30);
}

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kDatasetMagic[6] = {'R', 'J', 'P', 'A', '1', '\0'};
constexpr char kCheckpointMagic[5] = {'R', 'J', 'P', 'W', '1'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  const unsigned char* p;
  std::size_t len;
  std::size_t off = 0;

  void need(std::size_t n, const char* what) const {
    if (off + n > len)
      throw FormatError(std::string("truncated file: needed ") + what + " at offset " +
                        std::to_string(off));
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(p[off] | (p[off + 1] << 8));
    off += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
    off += 4;
    return v;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path);
}

}  // namespace

void write_dataset(const SequenceDataset& ds, const std::string& path) {
  ds.validate();
  std::string out;
  out.append(kDatasetMagic, sizeof(kDatasetMagic));
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(ds.count()));
  put_u32(out, static_cast<std::uint32_t>(ds.T));
  put_u32(out, static_cast<std::uint32_t>(ds.patch_height));
  put_u32(out, static_cast<std::uint32_t>(ds.patch_width));
  put_u32(out, static_cast<std::uint32_t>(ds.channels));

  std::string payload;
  payload.reserve(static_cast<std::size_t>(ds.count()) * ds.T * ds.patch_dim() * 4);
  for (const auto& seq : ds.sequences)
    for (const auto& patch : seq)
      for (double v : patch) {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        payload.append(buf, 4);
      }
  const std::uint32_t crc =
      crc32(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
  out += payload;
  put_u32(out, crc);
  write_file(path, out);

  std::string manifest;
  manifest += "seed=" + std::to_string(ds.seed) + "\n";
  manifest += "generator=" + (ds.generator.empty() ? std::string("unknown") : ds.generator) + "\n";
  manifest += "split=" + (ds.split.empty() ? std::string("unspecified") : ds.split) + "\n";
  write_file(path + ".manifest", manifest);
}

SequenceDataset read_dataset(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};

  r.need(sizeof(kDatasetMagic), "magic");
  if (std::memcmp(bytes.data(), kDatasetMagic, sizeof(kDatasetMagic)) != 0)
    throw FormatError("bad magic at offset 0");
  r.off = sizeof(kDatasetMagic);
  const std::uint16_t version = r.u16("version");
  if (version != 1) throw FormatError("unsupported version " + std::to_string(version));

  SequenceDataset ds;
  const std::uint32_t count = r.u32("sequence count");
  const std::uint32_t T = r.u32("T");
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t c = r.u32("channels");
  if (h == 0 || w == 0 || c == 0) throw FormatError("zero patch dimension in header");

  const std::uint64_t dim64 = static_cast<std::uint64_t>(h) * w * c;
  const std::uint64_t values = static_cast<std::uint64_t>(count) * T * dim64;
  if (dim64 > (1u << 24) || values > (1ull << 32))
    throw FormatError("dimension overflow in header at offset 8");
  r.need(values * 4 + 4, "payload + crc");

  const unsigned char* payload = r.p + r.off;
  const std::size_t payload_len = static_cast<std::size_t>(values) * 4;
  Reader tail = r;
  tail.off = r.off + payload_len;
  const std::uint32_t stored_crc = tail.u32("crc");
  const std::uint32_t actual_crc = crc32(payload, payload_len);
  if (stored_crc != actual_crc)
    throw FormatError("payload CRC mismatch at offset " + std::to_string(r.off + payload_len));
  if (tail.off != bytes.size())
    throw FormatError("trailing bytes after CRC at offset " + std::to_string(tail.off));

  ds.patch_height = static_cast<int>(h);
  ds.patch_width = static_cast<int>(w);
  ds.channels = static_cast<int>(c);
  ds.T = static_cast<int>(T);
  ds.sequences.resize(count);
  std::size_t off = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    auto& seq = ds.sequences[s];
    seq.resize(T);
    for (std::uint32_t t = 0; t < T; ++t) {
      Vec patch(dim64);
      for (std::uint64_t i = 0; i < dim64; ++i) {
        float f;
        std::memcpy(&f, payload + off, 4);
        off += 4;
        patch[i] = static_cast<double>(f);
      }
      seq[t] = std::move(patch);
    }
  }

  // manifest sidecar is optional: defaults survive a missing file
  std::ifstream mf(path + ".manifest");
  if (mf) {
    std::string line;
    while (std::getline(mf, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "seed") ds.seed = std::strtoull(value.c_str(), nullptr, 10);
      if (key == "generator") ds.generator = value;
      if (key == "split") ds.split = value;
    }
  }
  ds.validate();
  return ds;
}

void write_checkpoint(const NamedMatrices& entries, const std::string& path) {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, m] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const std::size_t nbytes = static_cast<std::size_t>(m.size()) * 8;
    const std::size_t pos = out.size();
    out.resize(pos + nbytes);
    std::memcpy(out.data() + pos, m.data().data(), nbytes);
  }
  write_file(path, out);
}

NamedMatrices read_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
  r.need(sizeof(kCheckpointMagic), "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw FormatError("bad checkpoint magic at offset 0");
  r.off = sizeof(kCheckpointMagic);
  const std::uint16_t version = r.u16("version");
  if (version != 1) throw FormatError("unsupported checkpoint version " + std::to_string(version));

  NamedMatrices entries;
  const std::uint32_t n = r.u32("entry count");
  for (std::uint32_t e = 0; e < n; ++e) {
    const std::uint32_t name_len = r.u32("name length");
    if (name_len > 4096) throw FormatError("oversized name at offset " + std::to_string(r.off));
    r.need(name_len, "name");
    std::string name(reinterpret_cast<const char*>(r.p + r.off), name_len);
    r.off += name_len;
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    const std::uint64_t vals = static_cast<std::uint64_t>(rows) * cols;
    if (vals > (1ull << 28)) throw FormatError("oversized matrix at offset " + std::to_string(r.off));
    r.need(vals * 8, "matrix data");
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    std::memcpy(m.data().data(), r.p + r.off, static_cast<std::size_t>(vals) * 8);
    r.off += static_cast<std::size_t>(vals) * 8;
    entries.emplace_back(std::move(name), std::move(m));
  }
  if (r.off != bytes.size())
    throw FormatError("trailing bytes after checkpoint entries at offset " + std::to_string(r.off));
  return entries;
}

}  // namespace rjepa
