#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "certpoly/approx/fit.hpp"
#include "certpoly/attack/attack.hpp"
#include "certpoly/common/error.hpp"
#include "certpoly/common/rng.hpp"
#include "certpoly/compiler/compiler.hpp"
#include "certpoly/diffverify/diffverify.hpp"
#include "certpoly/nn/generate.hpp"
#include "certpoly/nn/network_io.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/certify.hpp"
#include "certpoly/sim/evaluator.hpp"

using namespace certpoly;

namespace {

struct Globals {
  int threads = 0;
  std::uint64_t seed = 0;
  int verbose = 0;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    nn::write_file(path, text);
}

void note(const Globals& g, const std::string& msg) {
  if (g.verbose > 0) std::cerr << msg << '\n';
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !(in >> std::ws).eof()) throw ParseError(std::string("bad ") + what + " list \"" + s + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError(std::string("empty ") + what + " list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nn::Dataset load_rows(const std::string& path, const nn::Network& net) {
  return nn::load_dataset(path, net.input_lo(), net.input_hi());
}

std::vector<double> to_std(const nn::Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// gen-net
struct GenNet {
  std::string arch = "8,16,16,2";
  std::string act = "gelu";
  double alpha = 0.0;
  double lo = -1.0, hi = 1.0;
  std::string image;
  int conv_channels = 2;
  int kernel = 3;
  std::string out;
};

int run_gen_net(const GenNet& o, const Globals& g) {
  const nn::Activation act = nn::Activation::parse(o.act, o.alpha);
  nn::Network net;
  if (!o.image.empty()) {
    const auto s = parse_list<int>(o.image, "image shape");
    if (s.size() != 3) throw ParseError("--image expects c,h,w");
    net = nn::random_conv_net({s[0], s[1], s[2]}, o.conv_channels, o.kernel, parse_list<int>(o.arch, "width"), act, g.seed);
  } else {
    net = nn::random_mlp(parse_list<int>(o.arch, "width"), act, g.seed, o.lo, o.hi);
  }
  emit(o.out, nn::network_to_text(net));
  return 0;
}

// gen-data
struct GenData {
  std::string net;
  std::size_t rows = 100;
  double shrink = 0.0;
  std::string out;
};

int run_gen_data(const GenData& o, const Globals& g) {
  const nn::Network net = nn::load_network(o.net);
  emit(o.out, nn::dataset_to_text(nn::random_dataset(net.input_lo(), net.input_hi(), o.rows, g.seed, o.shrink)));
  return 0;
}

// certify
struct Certify {
  std::string net;
  std::string degrees = "27";
  double eps_q = 1e-10;
  std::string mode = "heterogeneous";
  std::string domain = "zonotope";
  std::string sampled;
  double widen = 1.0;
  std::string out;
  std::string bounds;
};

int run_certify(const Certify& o, const Globals& g) {
  const nn::Network net = nn::load_network(o.net);
  ranges::CertifyConfig cfg;
  cfg.degrees = parse_list<int>(o.degrees, "degree");
  cfg.eps_q_target = o.eps_q;
  cfg.mode = o.mode == "uniform" ? ranges::FitMode::Uniform : ranges::FitMode::Heterogeneous;
  cfg.domain = o.domain == "interval" ? ranges::Domain::Interval : ranges::Domain::Zonotope;
  cfg.parallel = g.threads != 1;
  const auto t0 = std::chrono::steady_clock::now();
  nn::PolyNetwork pnet;
  ranges::BoundsReport report;
  if (!o.sampled.empty()) {
    report = ranges::sampled_ranges(net, load_rows(o.sampled, net), o.widen);
    pnet = ranges::fit_on_bounds(net, report, cfg);
  } else {
    auto res = ranges::certify_network(net, cfg);
    pnet = std::move(res.net);
    report = std::move(res.bounds);
  }
  note(g, "certify: " + std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
  emit(o.out, nn::network_to_text(pnet));
  if (!o.bounds.empty()) emit(o.bounds, ranges::bounds_to_text(report));
  return 0;
}

// attack
struct Attack {
  std::string net;
  std::string sampled;
  std::string certified;
  std::string data;
  attack::PerturbationSpec spec;
  std::string out;
  std::string save_inputs;
};

int run_attack(const Attack& o, const Globals& g) {
  const nn::Network net = nn::load_network(o.net);
  const nn::Dataset data = load_rows(o.data, net);
  if (o.sampled.empty() && o.certified.empty()) throw ParseError("attack needs --sampled and/or --certified");
  const nn::PolyNetwork ps = o.sampled.empty() ? nn::PolyNetwork{} : nn::PolyNetwork(nn::load_network(o.sampled));
  const nn::PolyNetwork pc = o.certified.empty() ? nn::PolyNetwork{} : nn::PolyNetwork(nn::load_network(o.certified));
  const nn::PolyNetwork& a = o.sampled.empty() ? pc : ps;
  const nn::PolyNetwork& b = o.certified.empty() ? ps : pc;
  const auto exec = g.threads == 1 ? parallel::Exec::Serial : parallel::Exec::Parallel;
  attack::CampaignReport rep = attack::attack_campaign(net, a, b, data, o.spec, g.seed, exec);
  if (o.sampled.empty()) {
    for (auto& r : rep.rows) r.sampled = {};
    rep.success_rate_sampled = 0.0;
  }
  if (o.certified.empty()) {
    for (auto& r : rep.rows) r.certified = {};
    rep.success_rate_certified = 0.0;
  }
  emit(o.out, attack::campaign_to_csv(rep));
  std::cerr << "success rate: sampled " << fmt(rep.success_rate_sampled) << ", certified "
            << fmt(rep.success_rate_certified) << '\n';
  if (!o.save_inputs.empty()) {
    nn::Dataset adv;
    for (const auto& r : rep.rows)
      if (r.sampled.success) adv.rows.push_back(r.sampled.input);
    nn::write_file(o.save_inputs, nn::dataset_to_text(adv));
  }
  const bool any = rep.success_rate_sampled > 0.0 || rep.success_rate_certified > 0.0;
  return any ? 0 : 1;
}

// compile
struct Compile {
  std::string poly;
  std::string profile = "30,40";
  std::string out;
  std::string params;
};

int run_compile(const Compile& o, const Globals&) {
  const nn::PolyNetwork pnet(nn::load_network(o.poly));
  const int depth = compiler::required_depth(pnet);
  const int n = compiler::circuit_dim(pnet);
  const compiler::CKKSParams p = compiler::select_params(depth, n * n, compiler::parse_profile(o.profile));
  const compiler::CircuitDesc circ = compiler::compile(pnet, p);
  emit(o.out, compiler::circuit_to_text(circ));
  if (!o.params.empty()) nn::write_file(o.params, compiler::params_to_text(p));
  std::cerr << "depth " << depth << ", N = 2^" << p.ring_log2_N << ", slots " << p.slot_count << ", log2(QP) "
            << p.total_bits() << ", dimension " << n << '\n';
  return 0;
}

// simulate
struct Simulate {
  std::string circuit;
  std::string params;
  std::string data;
  std::string poly;
  bool noise = false;
  double noise_bits = 0.0;
  bool exact = false;
  std::string calibrate;
  std::string log;
  std::string out;
};

int run_simulate(const Simulate& o, const Globals& g) {
  const compiler::CircuitDesc circ = compiler::load_circuit(o.circuit);
  compiler::CKKSParams params = compiler::parse_params(nn::read_file(o.params));
  std::optional<nn::PolyNetwork> pnet;
  if (!o.poly.empty()) pnet = nn::PolyNetwork(nn::load_network(o.poly));
  const nn::Vec inf = nn::Vec::Constant(circ.in_dim(), INFINITY);
  const nn::Dataset data = pnet ? load_rows(o.data, *pnet) : nn::load_dataset(o.data, -inf, inf);
  if (!o.calibrate.empty()) {
    const nn::Dataset cal = pnet ? load_rows(o.calibrate, *pnet) : nn::load_dataset(o.calibrate, -inf, inf);
    std::vector<std::vector<double>> rows;
    for (const auto& r : cal.rows) rows.push_back(to_std(r));
    params = sim::minimal_chain(circ, params, rows);
    std::cerr << "minimal chain:";
    for (int b : params.modulus_chain_bits) std::cerr << ' ' << b;
    std::cerr << '\n';
  }
  const sim::NoiseModel noise{o.noise, o.noise_bits};
  const auto arith = o.exact ? sim::Arithmetic::Exact : sim::Arithmetic::Quantized;
  std::vector<sim::RunResult> results(data.rows.size());
  std::vector<std::string> logs(data.rows.size());
  const auto exec = g.threads == 1 ? parallel::Exec::Serial : parallel::Exec::Parallel;
  parallel::for_each_index(data.rows.size(), exec, [&](std::size_t i) {
    sim::SimContext ctx(params, noise, stream_seed(g.seed, i), arith);
    ctx.set_logging(!o.log.empty());
    results[i] = sim::run_circuit(circ, to_std(data.rows[i]), ctx);
    if (!o.log.empty()) {
      std::ostringstream ls;
      for (const auto& r : ctx.log())
        ls << i << ',' << r.index << ',' << r.op << ',' << r.layer << ',' << r.level << ',' << fmt(r.scale_bits) << ','
           << fmt(r.max_abs_log2) << ',' << r.modulus_bits << ',' << (r.wrapped ? 1 : 0) << '\n';
      logs[i] = ls.str();
    }
  });
  std::ostringstream os;
  const int width = circ.out_dim();
  os << "row,status,levels";
  for (int j = 0; j < width; ++j) os << ",out_" << j;
  if (pnet) os << ",abs_error";
  os << '\n';
  double worst = 0.0;
  std::size_t bottoms = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    os << i << ',' << (r.output ? "ok" : "bottom") << ',' << r.levels_consumed;
    if (r.output) {
      for (double v : *r.output) os << ',' << fmt(v);
      if (pnet) {
        const nn::Vec ref = nn::forward_output(*pnet, data.rows[i]);
        double e = 0.0;
        for (int j = 0; j < width; ++j) e = std::max(e, std::fabs((*r.output)[j] - ref[j]));
        worst = std::max(worst, e);
        os << ',' << fmt(e);
      }
    } else {
      ++bottoms;
      for (int j = 0; j < width; ++j) os << ',';
      if (pnet) os << ',';
    }
    os << '\n';
  }
  emit(o.out, os.str());
  if (!o.log.empty()) {
    std::string all = "row,op,name,layer,level,scale_bits,max_abs_log2,modulus_bits,wrapped\n";
    for (const auto& l : logs) all += l;
    nn::write_file(o.log, all);
  }
  std::cerr << "rows " << results.size() << ", failures " << bottoms;
  if (pnet) std::cerr << ", max |ckks - f_pi| " << fmt(worst);
  std::cerr << '\n';
  return 0;
}

// report
struct Report {
  std::string kind = "convergence";
  std::string acts = "gelu,silu,elu,relu";
  std::string degrees = "10,20,40,80,160";
  double lo = -4.0, hi = 4.0;
  double eps_q = 1e-10;
  std::string net;
  std::size_t samples = 10000;
  std::string out;
};

int run_report(const Report& o, const Globals& g) {
  const auto degrees = parse_list<int>(o.degrees, "degree");
  std::ostringstream os;
  if (o.kind == "convergence") {
    os << "activation,degree,eps_pi,eps_q,eps_total\n";
    std::stringstream ss(o.acts);
    std::string name;
    while (std::getline(ss, name, ',')) {
      const nn::Activation act = nn::Activation::parse(name);
      for (int d : degrees) {
        const auto c = approx::fit_activation(act, o.lo, o.hi, d, o.eps_q);
        os << act.name() << ',' << d << ',' << fmt(c.eps_pi) << ',' << fmt(c.eps_q) << ',' << fmt(c.eps_total()) << '\n';
      }
    }
  } else if (o.kind == "diff") {
    if (o.net.empty()) throw ParseError("report --kind diff needs --net");
    const nn::Network net = nn::load_network(o.net);
    const auto fb = ranges::verified_report(net, ranges::Domain::Zonotope);
    const auto exec = g.threads == 1 ? parallel::Exec::Serial : parallel::Exec::Parallel;
    const auto xs = parallel::sample_box(net.input_lo(), net.input_hi(), o.samples, g.seed);
    os << "degree,max_eps_total,verified_bound,sampled_max_error\n";
    for (int d : degrees) {
      ranges::CertifyConfig cfg;
      cfg.degrees = {d};
      cfg.eps_q_target = o.eps_q;
      cfg.parallel = g.threads != 1;
      const auto res = ranges::certify_network(net, cfg);
      const auto diff = diffverify::diff_bound(net, res.net, fb, res.bounds);
      const double bound = std::max(diff.output.lo.cwiseAbs().maxCoeff(), diff.output.hi.cwiseAbs().maxCoeff());
      double eps = 0.0;
      for (int k = 0; k < res.net.num_blocks(); ++k)
        if (res.net.has_activation(k)) eps = std::max(eps, res.net.eps(k).maxCoeff());
      os << d << ',' << fmt(eps) << ',' << fmt(bound) << ',' << fmt(parallel::max_output_difference(res.net, net, xs, exec))
         << '\n';
    }
  } else {
    throw ParseError("report --kind must be convergence or diff");
  }
  emit(o.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certpoly: certified polynomial activations, overflow attacks and a CKKS circuit simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0 = OpenMP default, 1 = serial path)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Root seed; per-row streams are derived with splitmix64");
  app.add_flag("-v,--verbose", g.verbose, "Diagnostics on stderr");

  GenNet gn;
  auto* c_gn = app.add_subcommand("gen-net", "Write a random fixture network");
  c_gn->add_option("--arch", gn.arch, "Widths in,hidden...,out (dense widths after the conv for --image)");
  c_gn->add_option("--act", gn.act, "relu|leaky_relu|sigmoid|tanh|gelu|silu|elu");
  c_gn->add_option("--alpha", gn.alpha, "Activation parameter (leaky_relu, elu)");
  c_gn->add_option("--lo", gn.lo, "Input domain lower bound");
  c_gn->add_option("--hi", gn.hi, "Input domain upper bound");
  c_gn->add_option("--image", gn.image, "c,h,w: conv front end on a [0,1] image domain");
  c_gn->add_option("--conv-channels", gn.conv_channels);
  c_gn->add_option("--kernel", gn.kernel);
  c_gn->add_option("-o,--out", gn.out, "Output network file (default stdout)");

  GenData gd;
  auto* c_gd = app.add_subcommand("gen-data", "Write a random dataset inside a network's input domain");
  c_gd->add_option("net", gd.net)->required()->check(CLI::ExistingFile);
  c_gd->add_option("--rows", gd.rows);
  c_gd->add_option("--shrink", gd.shrink, "Keep rows this fraction of the width away from each bound");
  c_gd->add_option("-o,--out", gd.out);

  Certify ce;
  auto* c_ce = app.add_subcommand("certify", "Fit certified polynomial activations (or a sampled-bounds baseline)");
  c_ce->add_option("net", ce.net)->required()->check(CLI::ExistingFile);
  c_ce->add_option("--degrees", ce.degrees, "Degree per activation block; the last repeats");
  c_ce->add_option("--eps-q", ce.eps_q, "Surrogate accuracy target");
  c_ce->add_option("--mode", ce.mode)->check(CLI::IsMember({"heterogeneous", "uniform"}));
  c_ce->add_option("--domain", ce.domain)->check(CLI::IsMember({"zonotope", "interval"}));
  c_ce->add_option("--sampled", ce.sampled, "Fit on ranges sampled from this dataset instead (not certified)")
      ->check(CLI::ExistingFile);
  c_ce->add_option("--widen", ce.widen, "Widening factor for sampled ranges");
  c_ce->add_option("-o,--out", ce.out, "Polynomial network file");
  c_ce->add_option("--bounds", ce.bounds, "Bounds report file");

  Attack at;
  auto* c_at = app.add_subcommand("attack", "Run an overflow-attack campaign");
  c_at->add_option("net", at.net)->required()->check(CLI::ExistingFile);
  c_at->add_option("--sampled", at.sampled)->check(CLI::ExistingFile);
  c_at->add_option("--certified", at.certified)->check(CLI::ExistingFile);
  c_at->add_option("--data", at.data)->required()->check(CLI::ExistingFile);
  c_at->add_option("--linf", at.spec.linf_eps);
  c_at->add_option("--per-feature", at.spec.per_feature_frac);
  c_at->add_option("--rotate", at.spec.rotate_deg);
  c_at->add_option("--translate", at.spec.translate_frac);
  c_at->add_flag("--discretize", at.spec.discretize);
  c_at->add_option("--steps", at.spec.steps);
  c_at->add_option("--step-size", at.spec.step_size);
  c_at->add_option("--restarts", at.spec.restarts);
  c_at->add_option("-o,--out", at.out, "Campaign CSV");
  c_at->add_option("--save-inputs", at.save_inputs, "Dataset of successful inputs against the sampled design");

  Compile co;
  auto* c_co = app.add_subcommand("compile", "Compile a polynomial network to a circuit file");
  c_co->add_option("poly", co.poly)->required()->check(CLI::ExistingFile);
  c_co->add_option("--profile", co.profile, "q_i,scale bits: 30,40 or 45,60");
  c_co->add_option("-o,--out", co.out, "Circuit file");
  c_co->add_option("--params", co.params, "Parameter file");

  Simulate si;
  auto* c_si = app.add_subcommand("simulate", "Run a circuit under simulated CKKS arithmetic");
  c_si->add_option("circuit", si.circuit)->required()->check(CLI::ExistingFile);
  c_si->add_option("--params", si.params)->required()->check(CLI::ExistingFile);
  c_si->add_option("--data", si.data)->required()->check(CLI::ExistingFile);
  c_si->add_option("--poly", si.poly, "Polynomial network for error statistics")->check(CLI::ExistingFile);
  c_si->add_flag("--noise", si.noise, "Enable per-op gaussian noise");
  c_si->add_option("--noise-bits", si.noise_bits, "Noise std is 2^(bits - scale_bits)");
  c_si->add_flag("--exact", si.exact, "No fixed-point rounding");
  c_si->add_option("--calibrate", si.calibrate, "Shrink the chain to the minimum admitting these rows")
      ->check(CLI::ExistingFile);
  c_si->add_option("--log", si.log, "Per-op trace CSV");
  c_si->add_option("-o,--out", si.out, "Result CSV");

  Report re;
  auto* c_re = app.add_subcommand("report", "Emit CSV tables");
  c_re->add_option("--kind", re.kind)->check(CLI::IsMember({"convergence", "diff"}));
  c_re->add_option("--acts", re.acts);
  c_re->add_option("--degrees", re.degrees);
  c_re->add_option("--lo", re.lo);
  c_re->add_option("--hi", re.hi);
  c_re->add_option("--eps-q", re.eps_q);
  c_re->add_option("--net", re.net)->check(CLI::ExistingFile);
  c_re->add_option("--samples", re.samples);
  c_re->add_option("-o,--out", re.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (g.threads > 0) parallel::set_threads(g.threads);
  try {
    if (*c_gn) return run_gen_net(gn, g);
    if (*c_gd) return run_gen_data(gd, g);
    if (*c_ce) return run_certify(ce, g);
    if (*c_at) return run_attack(at, g);
    if (*c_co) return run_compile(co, g);
    if (*c_si) return run_simulate(si, g);
    if (*c_re) return run_report(re, g);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
