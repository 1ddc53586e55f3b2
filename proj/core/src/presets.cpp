#include "rjepa/presets.hpp"

#include <cmath>

#include "rjepa/errors.hpp"

namespace rjepa {

namespace {

LatentProcessParams assemble(const Vec& rho, const Vec& innovation_sd, int patch_dim,
                             std::uint64_t seed) {
  const int latent = static_cast<int>(rho.size());
  if (patch_dim < latent) throw ValidationError("patch_dim must be >= latent dimension");
  LatentProcessParams p;
  p.u = Matrix::diag(rho);
  Vec var(latent);
  for (int i = 0; i < latent; ++i) var[i] = innovation_sd[i] * innovation_sd[i];
  p.sigma = Matrix::diag(var);
  Rng rng(seed);
  p.emission = Matrix::orthonormal(patch_dim, latent, rng);  // tall: orthonormal columns
  p.patch_height = patch_dim;
  p.patch_width = 1;
  p.channels = 1;
  p.validate();
  return p;
}

}  // namespace

LatentProcessParams predictable_process(int patch_dim, int slow, int fast, double rho_slow,
                                        double rho_fast, double amp_slow, double amp_fast,
                                        double obs_noise, std::uint64_t seed) {
  Vec rho, sd;
  for (int i = 0; i < slow; ++i) {
    rho.push_back(rho_slow);
    sd.push_back(amp_slow * std::sqrt(1.0 - rho_slow * rho_slow));
  }
  // white latents that emit onto the same patch directions as the slow ones:
  // a single patch cannot separate the two, temporal averaging can
  for (int i = 0; i < slow; ++i) {
    rho.push_back(0.0);
    sd.push_back(obs_noise);
  }
  for (int i = 0; i < fast; ++i) {
    rho.push_back(rho_fast);
    sd.push_back(amp_fast * std::sqrt(1.0 - rho_fast * rho_fast));
  }
  LatentProcessParams p = assemble(rho, sd, patch_dim, seed);
  Rng rng(Rng::substream_seed(seed, 1));
  Matrix lift = Matrix::orthonormal(patch_dim, slow + fast, rng);
  Matrix emission(patch_dim, 2 * slow + fast);
  for (int r = 0; r < patch_dim; ++r) {
    for (int c = 0; c < slow; ++c) {
      emission(r, c) = lift(r, c);
      emission(r, slow + c) = lift(r, c);
    }
    for (int c = 0; c < fast; ++c) emission(r, 2 * slow + c) = lift(r, slow + c);
  }
  p.emission = std::move(emission);
  p.validate();
  return p;
}

LatentProcessParams collapse_process(int patch_dim, int latent, int slow, double rho_slow,
                                     double rho_fast_lo, double rho_fast_hi, std::uint64_t seed) {
  if (slow >= latent) throw ValidationError("need at least one fast dimension");
  Rng rng(Rng::substream_seed(seed, 0xC011));
  Vec rho, sd;
  for (int i = 0; i < latent; ++i) {
    const double r = i < slow ? rho_slow : rng.uniform(rho_fast_lo, rho_fast_hi);
    rho.push_back(r);
    sd.push_back(std::sqrt(1.0 - r * r));  // unit stationary variance everywhere
  }
  return assemble(rho, sd, patch_dim, seed);
}

LatentProcessParams white_process(int dim) {
  LatentProcessParams p;
  p.u = Matrix(dim, dim);
  p.sigma = Matrix::identity(dim);
  p.emission = Matrix::identity(dim);
  p.patch_height = dim;
  p.patch_width = 1;
  p.channels = 1;
  p.validate();
  return p;
}

SequenceDataset preset_dataset(const LatentProcessParams& params, int count, int T,
                               std::uint64_t seed, std::uint64_t index_offset) {
  return gen_latent_sequences(params, count, T, seed, index_offset);
}

}  // namespace rjepa
