#include "dau/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "dau/binary_io.hpp"
#include "dau/envs.hpp"
#include "dau/errors.hpp"

namespace dau {

namespace {
constexpr char kMagic[8] = {'D', 'A', 'U', 'C', 'K', 'P', 'T', '1'};
constexpr std::size_t kMaxText = 1 << 20;
}  // namespace

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw IoError("corrupt generator state");
  return rng;
}

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const Agent& agent,
                     const LoopState& loop) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof kMagic);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  std::string text;
  for (const auto& k : ExperimentConfig::keys()) text += k + "=" + cfg.get(k) + "\n";
  io::write_string(out, text);
  io::write_string(out, agent.kind());
  agent.save(out);
  io::write_le<std::uint64_t>(out, loop.epochs_done);
  io::write_le<std::uint64_t>(out, loop.env_steps);
  io::write_le<std::uint64_t>(out, loop.rng_states.size());
  for (const auto& s : loop.rng_states) io::write_string(out, s);
  io::write_le<std::uint64_t>(out, loop.ou_values.size());
  for (const auto& v : loop.ou_values) io::write_doubles(out, v);
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw IoError("'" + path + "' is not a checkpoint");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  apply_key_values(ck.config, parse_key_values(io::read_string(in, kMaxText)));
  const std::string kind = io::read_string(in, 64);
  if (kind != ck.config.agent) throw IoError("checkpoint agent kind does not match its config");

  const Environment env = make_environment(ck.config.env);
  NetworkSpec nets;
  nets.hidden = ck.config.hidden;
  ck.agent = make_agent(kind, env.dynamics, nets, ck.config.hyper(), ck.config.dt);
  ck.agent->load(in);

  ck.loop.epochs_done = io::read_le<std::uint64_t>(in);
  ck.loop.env_steps = io::read_le<std::uint64_t>(in);
  const auto n_rng = io::read_le<std::uint64_t>(in);
  if (n_rng > 1'000'000) throw IoError("corrupt checkpoint");
  for (std::uint64_t i = 0; i < n_rng; ++i) ck.loop.rng_states.push_back(io::read_string(in, 1 << 16));
  const auto n_ou = io::read_le<std::uint64_t>(in);
  if (n_ou > 1'000'000) throw IoError("corrupt checkpoint");
  for (std::uint64_t i = 0; i < n_ou; ++i) {
    const auto n = io::read_le<std::uint64_t>(in);
    if (n > 1024) throw IoError("corrupt checkpoint");
    std::vector<double> v(n);
    for (auto& x : v) x = io::read_le<double>(in);
    ck.loop.ou_values.push_back(std::move(v));
  }
  return ck;
}

}  // namespace dau
