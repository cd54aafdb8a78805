#include "ym/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ym/rng.hpp"

namespace ym {

std::string to_string(TrunkMode m) {
  return m == TrunkMode::kLiteralBlock ? "literal-block" : "lifted-trunk";
}

TrunkMode trunk_mode_from_string(const std::string& s) {
  if (s == "literal-block") return TrunkMode::kLiteralBlock;
  if (s == "lifted-trunk") return TrunkMode::kLiftedTrunk;
  throw invalid_input("unknown trunk mode: " + s);
}

ParamLayout make_layout(const NetworkConfig& cfg) {
  YM_CHECK(cfg.input_dim >= 1, "network: input_dim must be >= 1");
  YM_CHECK(cfg.depth >= 0, "network: depth must be >= 0");
  YM_CHECK(cfg.width >= 1, "network: width must be >= 1");
  ParamLayout lay;
  lay.input_dim = cfg.input_dim;
  lay.width = cfg.width;
  lay.lifted = cfg.trunk == TrunkMode::kLiftedTrunk;
  lay.trunk_width = lay.lifted ? cfg.width : cfg.input_dim;
  std::size_t off = 0;
  if (lay.lifted) {
    lay.lift_w = off;
    off += static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.input_dim);
    lay.lift_b = off;
    off += static_cast<std::size_t>(cfg.width);
  }
  const auto n = static_cast<std::size_t>(lay.trunk_width);
  const auto m = static_cast<std::size_t>(cfg.width);
  for (int i = 0; i < cfg.depth; ++i) {
    ParamLayout::Block blk;
    blk.w1 = off;
    off += m * n;
    blk.b1 = off;
    off += m;
    blk.w2 = off;
    off += n * m;
    blk.b2 = off;
    off += n;
    lay.blocks.push_back(blk);
  }
  lay.head_w = off;
  off += n;
  lay.head_b = off;
  off += 1;
  lay.total = off;
  return lay;
}

std::size_t param_count(const NetworkConfig& cfg) { return make_layout(cfg).total; }

PotentialNetwork init_xavier(const NetworkConfig& cfg) {
  PotentialNetwork net;
  net.config = cfg;
  net.layout = make_layout(cfg);
  net.params.assign(net.layout.total, 0.0);
  RngStream rng = RngStream::substream(cfg.seed, "xavier-init");

  auto fill_matrix = [&](std::size_t off, int rows, int cols) {
    const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (int i = 0; i < rows * cols; ++i)
      net.params[off + static_cast<std::size_t>(i)] = rng.uniform(-lim, lim);
  };

  const auto& lay = net.layout;
  if (lay.lifted) fill_matrix(lay.lift_w, cfg.width, cfg.input_dim);
  for (const auto& blk : lay.blocks) {
    fill_matrix(blk.w1, cfg.width, lay.trunk_width);
    fill_matrix(blk.w2, lay.trunk_width, cfg.width);
  }
  fill_matrix(lay.head_w, 1, lay.trunk_width);
  return net;
}

double eval_value(const PotentialNetwork& net, span<const double> x) {
  YM_CHECK(static_cast<int>(x.size()) == net.config.input_dim,
           "eval_value: input dimension mismatch");
  detail::PlainParams pp{net.params};
  return detail::forward_potential<double>(net.layout, pp, x);
}

Jet2d eval_jet(const PotentialNetwork& net, span<const double> x, int dir_a, int dir_b) {
  YM_CHECK(static_cast<int>(x.size()) == net.config.input_dim,
           "eval_jet: input dimension mismatch");
  YM_CHECK(dir_a >= 0 && dir_a < net.config.input_dim, "eval_jet: dir_a out of range");
  YM_CHECK(dir_b < net.config.input_dim, "eval_jet: dir_b out of range");
  std::vector<Jet2d> in(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    in[i].v = x[i];
    in[i].da = (static_cast<int>(i) == dir_a) ? 1.0 : 0.0;
    in[i].db = (static_cast<int>(i) == dir_b) ? 1.0 : 0.0;
    in[i].dab = 0.0;
  }
  detail::PlainParams pp{net.params};
  return detail::forward_potential<Jet2d>(net.layout, pp, span<const Jet2d>(in));
}

RecordedPotential record_potential(Tape& tape, const ParamLayout& lay, int dir_a, int dir_b) {
  YM_CHECK(tape.param_count() == static_cast<std::int32_t>(lay.total),
           "record_potential: tape parameter block does not match layout");
  std::vector<Jet2<TV>> in(static_cast<std::size_t>(lay.input_dim));
  for (int i = 0; i < lay.input_dim; ++i) {
    auto& j = in[static_cast<std::size_t>(i)];
    j.v = TV{&tape, tape.add_input()};
    j.da = TV::constant(i == dir_a ? 1.0 : 0.0);
    j.db = TV::constant((dir_b >= 0 && i == dir_b) ? 1.0 : 0.0);
    j.dab = TV::constant(0.0);
  }
  detail::TapeParams tp{&tape};
  Jet2<TV> out = detail::forward_potential<Jet2<TV>>(lay, tp, span<const Jet2<TV>>(in));
  RecordedPotential rec;
  rec.value = out.v.id;
  rec.da = out.da.id;
  rec.db = out.db.id;
  rec.dab = out.dab.id;
  return rec;
}

namespace {
constexpr std::size_t kHeaderBytes = 512;
constexpr const char* kMagic = "YMPOT1";
}  // namespace

void save_checkpoint(const PotentialNetwork& net, const std::string& path) {
  std::ostringstream hdr;
  hdr << kMagic << "\n"
      << "input_dim=" << net.config.input_dim << "\n"
      << "depth=" << net.config.depth << "\n"
      << "width=" << net.config.width << "\n"
      << "trunk=" << to_string(net.config.trunk) << "\n"
      << "seed=" << net.config.seed << "\n"
      << "params=" << net.params.size() << "\n"
      << "format=float64-le\n"
      << "data_offset=" << kHeaderBytes << "\n";
  std::string h = hdr.str();
  YM_CHECK(h.size() < kHeaderBytes, "checkpoint header overflow");
  h.resize(kHeaderBytes, '\n');

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open checkpoint for writing: " + path);
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  f.write(reinterpret_cast<const char*>(net.params.data()),
          static_cast<std::streamsize>(net.params.size() * sizeof(double)));
  if (!f) throw io_error("failed writing checkpoint: " + path);
}

PotentialNetwork load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open checkpoint: " + path);
  std::string h(kHeaderBytes, '\0');
  f.read(h.data(), static_cast<std::streamsize>(kHeaderBytes));
  if (!f) throw io_error("truncated checkpoint header: " + path);
  std::istringstream is(h);
  std::string magic;
  std::getline(is, magic);
  if (magic != kMagic) throw io_error("incompatible checkpoint version in " + path);

  NetworkConfig cfg;
  std::size_t n_params = 0;
  std::size_t offset = 0;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "input_dim") cfg.input_dim = std::stoi(val);
    else if (key == "depth") cfg.depth = std::stoi(val);
    else if (key == "width") cfg.width = std::stoi(val);
    else if (key == "trunk") cfg.trunk = trunk_mode_from_string(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "params") n_params = std::stoul(val);
    else if (key == "data_offset") offset = std::stoul(val);
  }
  YM_CHECK(offset >= kHeaderBytes, "checkpoint: bad data offset");

  PotentialNetwork net;
  net.config = cfg;
  net.layout = make_layout(cfg);
  if (n_params != net.layout.total)
    throw io_error("checkpoint parameter count does not match its config: " + path);
  net.params.assign(n_params, 0.0);
  f.seekg(static_cast<std::streamoff>(offset));
  f.read(reinterpret_cast<char*>(net.params.data()),
         static_cast<std::streamsize>(n_params * sizeof(double)));
  if (!f) throw io_error("truncated checkpoint data: " + path);
  return net;
}

}  // namespace ym
