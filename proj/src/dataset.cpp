#include "reel/dataset.hpp"

#include "reel/binary_io.hpp"
#include "reel/error.hpp"

namespace reel {

namespace {

DatasetHeader parse_header(BinaryReader& in) {
  in.expect_magic("REEL");
  DatasetHeader h;
  h.version = in.u32();
  if (h.version != kDatasetVersion) {
    throw FormatError(in.path() + ": unsupported version " + std::to_string(h.version) +
                      " at offset 4");
  }
  const std::uint64_t grid_at = in.offset();
  const std::uint64_t nx = in.u64(), ny = in.u64();
  const double dx = in.f64(), dt = in.f64();
  try {
    h.grid = GridSpec(nx, ny, dx, dt);
  } catch (const UsageError& e) {
    throw FormatError(in.path() + ": bad grid at offset " + std::to_string(grid_at) + ": " +
                      e.what());
  }
  h.n_states = in.u64();
  h.model = in.str();
  const std::uint32_t nf = in.u32();
  in.require(nf, 8, "field names");
  for (std::uint32_t k = 0; k < nf; ++k) h.fields.push_back(in.str());
  const std::uint32_t np = in.u32();
  in.require(np, 16, "parameters");
  for (std::uint32_t k = 0; k < np; ++k) {
    h.param_names.push_back(in.str());
    h.theta_true.push_back(in.f64());
  }
  h.ic_seed = in.u64();
  h.source_seed = in.u64();
  h.first_step = in.u64();
  h.config_text = in.str();
  h.payload_offset = in.offset();
  return h;
}

}  // namespace

std::uint64_t expected_file_size(const DatasetHeader& h) {
  return h.payload_offset +
         h.n_states * h.fields.size() * h.grid.size() * sizeof(double);
}

void save(const Trajectory& traj, const std::string& path) {
  if (traj.steps.empty()) throw UsageError("cannot save an empty trajectory");
  const ModelState& first = traj.steps.front();
  BinaryWriter out(path);
  out.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("REEL"), 4));
  out.u32(kDatasetVersion);
  out.u64(traj.grid.nx);
  out.u64(traj.grid.ny);
  out.f64(traj.grid.dx);
  out.f64(traj.grid.dt);
  out.u64(traj.steps.size());
  out.str(traj.model);
  out.u32(static_cast<std::uint32_t>(first.names.size()));
  for (const auto& n : first.names) out.str(n);
  out.u32(static_cast<std::uint32_t>(traj.param_names.size()));
  for (std::size_t p = 0; p < traj.param_names.size(); ++p) {
    out.str(traj.param_names[p]);
    out.f64(traj.theta_true[p]);
  }
  out.u64(traj.ic_seed);
  out.u64(traj.source_seed);
  out.u64(first.step);
  out.str(traj.config_text);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const ModelState& s = traj.steps[t];
    if (s.names != first.names) throw UsageError("trajectory states disagree on field names");
    if (s.step != first.step + t) throw UsageError("trajectory steps are not consecutive");
    for (const ScalarField& f : s.fields) {
      if (!f.grid().same_mesh(traj.grid)) throw GridMismatch("state field off the trajectory grid");
      out.f64s(f.values());
    }
  }
  out.close();
}

DatasetHeader read_header(const std::string& path) {
  BinaryReader in(path);
  DatasetHeader h = parse_header(in);
  const std::uint64_t want = expected_file_size(h);
  if (in.file_size() < want) {
    throw FormatError(path + ": truncated payload, file ends at offset " +
                      std::to_string(in.file_size()) + " but header declares " +
                      std::to_string(want) + " bytes");
  }
  return h;
}

Trajectory load(const std::string& path) {
  BinaryReader in(path);
  const DatasetHeader h = parse_header(in);
  const std::uint64_t per_state = h.fields.size() * h.grid.size() * sizeof(double);
  in.require(h.n_states, per_state, "state payload");
  Trajectory traj;
  traj.grid = h.grid;
  traj.model = h.model;
  traj.config_text = h.config_text;
  traj.param_names = h.param_names;
  traj.theta_true = h.theta_true;
  traj.ic_seed = h.ic_seed;
  traj.source_seed = h.source_seed;
  traj.steps.reserve(h.n_states);
  for (std::uint64_t t = 0; t < h.n_states; ++t) {
    ModelState s;
    s.step = h.first_step + t;
    for (const auto& name : h.fields) {
      std::vector<double> data(h.grid.size());
      in.f64s(data);
      s.names.push_back(name);
      s.fields.emplace_back(h.grid, std::move(data));
    }
    traj.steps.push_back(std::move(s));
  }
  if (in.offset() != in.file_size()) {
    throw FormatError(path + ": " + std::to_string(in.file_size() - in.offset()) +
                      " trailing bytes at offset " + std::to_string(in.offset()));
  }
  return traj;
}

}  // namespace reel
