// Compressed dataset files. Layout (little-endian):
//
//   "RLCD" | u32 version | str model | str config | u32 n_params, (str, f64)...
//   str projection stream id | u64 projection_seed | u8 kind
//   u64 value_seed | u64 freq_seed | u64 n_val | u64 n_freq | u64 d
//   f64 ratio | u8 beta kind | f64 beta value | f64 lambda
//   u64 nx | u64 ny | f64 dx | f64 dt | u64 ic_seed | u64 source_seed | f64 preprocess_ms
//   u32 n_channels, (str field, u64 features, u8 routing)... | u64 n_times
//   blocks, t-major: u8 flags | f64 beta | [mask bits] | [value rows] | [freq rows]
//
// flags: 1 value rows present, 2 frequency rows present, 4 mask present.

#include <cstring>

#include "reel/binary_io.hpp"
#include "reel/error.hpp"
#include "reel/learn.hpp"

namespace reel {

namespace {

constexpr std::uint32_t kCompressedVersion = 1;

ProjectionSpec read_projection(std::uint8_t kind, std::uint64_t n, std::uint64_t d,
                               std::uint64_t seed, const BinaryReader& in) {
  try {
    if (kind == static_cast<std::uint8_t>(ProjectionKind::Identity)) {
      if (n != d) throw FormatError("identity projection with n != d");
      return make_identity_projection(d);
    }
    if (kind != static_cast<std::uint8_t>(ProjectionKind::Gaussian)) {
      throw FormatError("unknown projection kind " + std::to_string(kind));
    }
    return make_projection(n, d, seed);
  } catch (const Error& e) {
    throw FormatError(in.path() + ": bad projection header before offset " +
                      std::to_string(in.offset()) + ": " + e.what());
  }
}

}  // namespace

void save_compressed(const CompressedDataset& cds, const std::string& path) {
  BinaryWriter out(path);
  out.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("RLCD"), 4));
  out.u32(kCompressedVersion);
  out.str(cds.model);
  out.str(cds.config_text);
  out.u32(static_cast<std::uint32_t>(cds.param_names.size()));
  for (std::size_t p = 0; p < cds.param_names.size(); ++p) {
    out.str(cds.param_names[p]);
    out.f64(cds.theta_true[p]);
  }
  out.str(kProjectionStreamId);
  out.u64(cds.projection_seed);
  out.u8(static_cast<std::uint8_t>(cds.value_proj.kind()));
  out.u64(cds.value_proj.seed());
  out.u64(cds.freq_proj.seed());
  out.u64(cds.n_val());
  out.u64(cds.n_freq());
  out.u64(cds.value_proj.d());
  out.f64(cds.ratio);
  out.u8(static_cast<std::uint8_t>(cds.beta.kind));
  out.f64(cds.beta.value);
  out.f64(cds.lambda);
  out.u64(cds.grid.nx);
  out.u64(cds.grid.ny);
  out.f64(cds.grid.dx);
  out.f64(cds.grid.dt);
  out.u64(cds.ic_seed);
  out.u64(cds.source_seed);
  out.f64(cds.preprocess_ms);
  out.u32(static_cast<std::uint32_t>(cds.channels.size()));
  for (const auto& ch : cds.channels) {
    out.str(ch.field);
    out.u64(ch.features);
    out.u8(static_cast<std::uint8_t>(ch.routing));
  }
  out.u64(cds.n_times);
  const std::size_t d = cds.grid.size();
  std::vector<std::uint8_t> bits((d + 7) / 8);
  for (const CompressedBlock& b : cds.blocks) {
    const bool has_mask = !b.mask.keep.empty();
    out.u8(static_cast<std::uint8_t>((b.value.empty() ? 0 : 1) | (b.freq.empty() ? 0 : 2) |
                                     (has_mask ? 4 : 0)));
    out.f64(b.beta);
    if (has_mask) {
      std::fill(bits.begin(), bits.end(), 0);
      for (std::size_t k = 0; k < d; ++k) {
        if (b.mask.keep[k]) bits[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
      }
      out.bytes(bits);
    }
    out.f64s(b.value);
    out.f64s(b.freq);
  }
  out.close();
}

CompressedDataset load_compressed(const std::string& path) {
  BinaryReader in(path);
  in.expect_magic("RLCD");
  const std::uint32_t version = in.u32();
  if (version != kCompressedVersion) {
    throw FormatError(path + ": unsupported compressed-dataset version " + std::to_string(version) +
                      " at offset 4");
  }
  CompressedDataset cds;
  cds.model = in.str();
  cds.config_text = in.str();
  const std::uint32_t np = in.u32();
  in.require(np, 16, "parameters");
  for (std::uint32_t p = 0; p < np; ++p) {
    cds.param_names.push_back(in.str());
    cds.theta_true.push_back(in.f64());
  }
  const std::uint64_t stream_at = in.offset();
  const std::string stream = in.str();
  if (stream != kProjectionStreamId) {
    throw FormatError(path + ": projection stream \"" + stream + "\" at offset " +
                      std::to_string(stream_at) + " is not supported (expected " +
                      kProjectionStreamId + ")");
  }
  cds.projection_seed = in.u64();
  const std::uint8_t kind = in.u8();
  const std::uint64_t vseed = in.u64(), fseed = in.u64();
  const std::uint64_t nv = in.u64(), nf = in.u64(), d = in.u64();
  cds.value_proj = read_projection(kind, nv, d, vseed, in);
  cds.freq_proj = read_projection(kind, nf, d, fseed, in);
  cds.ratio = in.f64();
  const std::uint8_t bk = in.u8();
  if (bk > 1) throw FormatError(path + ": bad beta rule before offset " + std::to_string(in.offset()));
  cds.beta.kind = static_cast<BetaRule::Kind>(bk);
  cds.beta.value = in.f64();
  cds.lambda = in.f64();
  const std::uint64_t grid_at = in.offset();
  const std::uint64_t nx = in.u64(), ny = in.u64();
  const double dx = in.f64(), dt = in.f64();
  try {
    cds.grid = GridSpec(nx, ny, dx, dt);
  } catch (const UsageError& e) {
    throw FormatError(path + ": bad grid at offset " + std::to_string(grid_at) + ": " + e.what());
  }
  if (cds.grid.size() != d) {
    throw FormatError(path + ": projection length " + std::to_string(d) +
                      " does not match the grid at offset " + std::to_string(grid_at));
  }
  cds.ic_seed = in.u64();
  cds.source_seed = in.u64();
  cds.preprocess_ms = in.f64();
  const std::uint32_t nc = in.u32();
  in.require(nc, 17, "channels");
  for (std::uint32_t c = 0; c < nc; ++c) {
    ChannelInfo ch;
    ch.field = in.str();
    ch.features = in.u64();
    const std::uint8_t r = in.u8();
    if (r > 2 || ch.features > (1u << 20)) {
      throw FormatError(path + ": bad channel record ending at offset " + std::to_string(in.offset()));
    }
    ch.routing = static_cast<Routing>(r);
    cds.channels.push_back(ch);
  }
  cds.n_times = in.u64();
  in.require(cds.n_times, nc * 9, "blocks");
  cds.blocks.resize(cds.n_times * nc);
  std::vector<std::uint8_t> bits((d + 7) / 8);
  for (std::size_t t = 0; t < cds.n_times; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      CompressedBlock& b = cds.blocks[t * nc + c];
      const std::uint64_t at = in.offset();
      const std::uint8_t flags = in.u8();
      if (flags > 7) throw FormatError(path + ": bad block flags at offset " + std::to_string(at));
      b.beta = in.f64();
      if (flags & 4) {
        in.bytes(bits);
        b.mask = FrequencyMask(cds.grid, false);
        for (std::size_t k = 0; k < d; ++k) b.mask.keep[k] = (bits[k / 8] >> (k % 8)) & 1u;
      }
      const std::size_t m = cds.channels[c].features + 1;
      if (flags & 1) {
        in.require(m * nv, 8, "value rows");
        b.value.resize(m * nv);
        in.f64s(b.value);
      }
      if (flags & 2) {
        in.require(m * 2 * nf, 8, "frequency rows");
        b.freq.resize(m * 2 * nf);
        in.f64s(b.freq);
      }
    }
  }
  if (in.offset() != in.file_size()) {
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(in.offset()));
  }
  return cds;
}

}  // namespace reel
