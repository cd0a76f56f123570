// lqkd: command-line front end for the layered QKD/SQKD simulator.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lqkd/lqkd.hpp"

namespace {

struct Options {
  std::string network;
  std::string mode = "general";
  std::size_t rounds = 10000;
  std::size_t key_length = 256;
  double delta = lqkd::kDefaultDelta;
  double check_fraction = lqkd::kDefaultCheckFraction;
  std::uint64_t seed = 1;
  std::string attack = "none";
  std::string out = ".";
  std::string sweep;
  std::string transcript_path;
  bool transcript = false;
  unsigned threads = 0;
  // scan
  std::string curve = "cloning";
  std::vector<int> dims{2, 4};
  int max_l = 10;
  std::size_t trials = 0;
  double step = 0.05;
};

lqkd::Network resolve_network(const Options& o) {
  return o.network.empty() ? lqkd::illustrative_network() : lqkd::load_network(o.network);
}

bool truncated(const Options& o) {
  if (o.mode == "general") return false;
  if (o.mode == "truncated") return true;
  throw lqkd::ConfigError("mode", "expected 'general' or 'truncated'");
}

lqkd::ExperimentSpec make_spec(const Options& o, lqkd::Protocol p) {
  lqkd::ExperimentSpec s;
  s.protocol = p;
  if (p != lqkd::Protocol::boyer) {
    s.network = resolve_network(o);
    s.truncated = truncated(o);
  }
  s.rounds = o.rounds;
  s.key_length = o.key_length;
  s.delta = o.delta;
  s.check_fraction = o.check_fraction;
  s.seed = o.seed;
  s.attack = lqkd::parse_attack(o.attack);
  if (!o.sweep.empty()) s.sweep = lqkd::parse_sweep(o.sweep);
  s.out_dir = o.out;
  s.transcript = o.transcript;
  s.threads = o.threads;
  return s;
}

void emit(const Options& o, const std::string& name, const std::string& text) {
  if (o.out == "-") {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(o.out);
  const auto path = (std::filesystem::path(o.out) / name).string();
  lqkd::write_text_file(path, text);
  std::cout << path << "\n";
}

std::string scan_csv(const Options& o) {
  std::string out;
  if (o.curve == "cloning") {
    if (!(o.step > 0.0 && o.step <= 1.0)) throw lqkd::ConfigError("step", "must lie in (0, 1]");
    out = "F,i_ab_qubit,f_e_qubit,i_ae_qubit,valid_qubit,f_e_alt_qubit,i_ae_alt_qubit,i_ab_ququart,f_e_ququart,i_ae_ququart,valid_ququart\n";
    const int n = static_cast<int>(std::lround(1.0 / o.step));
    for (int k = 0; k <= n; ++k) {
      const double F = std::min(1.0, k * o.step);
      const auto q = lqkd::mi_cloning_qubit(F);
      const auto u = lqkd::mi_cloning_ququart(F);
      out += lqkd::format12(F) + ',' + lqkd::format12(q.i_ab) + ',' + lqkd::format12(q.f_e) + ',' +
             lqkd::format12(q.i_ae) + ',' + (q.valid ? "1" : "0") + ',' + lqkd::format12(q.f_e_alt) + ',' +
             lqkd::format12(q.i_ae_alt) + ',' + lqkd::format12(u.i_ab) + ',' + lqkd::format12(u.f_e) + ',' +
             lqkd::format12(u.i_ae) + ',' + (u.valid ? "1" : "0") + '\n';
    }
    return out;
  }
  if (o.curve == "detection") {
    if (o.max_l < 1) throw lqkd::ConfigError("max-l", "must be at least 1");
    out = "d,l,p_detect,trials,detected,frequency\n";
    for (int d : o.dims) {
      if (d < 2) throw lqkd::ConfigError("dims", "dimensions must be at least 2");
      for (int l = 1; l <= o.max_l; ++l) {
        std::string mc = ",,";
        if (o.trials > 0) {
          const auto seed = lqkd::derive_round_seed(o.seed, static_cast<std::uint64_t>(d * 1000 + l), lqkd::StreamTag::trial);
          const auto t = lqkd::intercept_detection_frequency({d}, l, o.trials, seed, o.threads);
          mc = std::to_string(t.trials) + ',' + std::to_string(t.detected) + ',' + lqkd::format12(t.frequency());
        }
        out += std::to_string(d) + ',' + std::to_string(l) + ',' +
               lqkd::format12(lqkd::detection_probability_intercept(d, l)) + ',' + mc + '\n';
      }
    }
    return out;
  }
  throw lqkd::ConfigError("curve", "expected 'cloning' or 'detection'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered QKD / semi-quantum QKD simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_network = [&](CLI::App* c) {
    c->add_option("--network", o.network, "network JSON (default: built-in three-party example)");
    c->add_option("--mode", o.mode, "state construction: general | truncated")->check(CLI::IsMember({"general", "truncated"}));
  };
  auto add_run = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "master seed");
    c->add_option("--attack", o.attack, "attack JSON path or preset, e.g. cloning:Bob1:0.9");
    c->add_option("--out", o.out, "output directory");
    c->add_flag("--transcript", o.transcript, "also write transcript.csv");
    c->add_option("--sweep", o.sweep, "<param>=<v1,v2,...>: F, l, seed, rounds, key_length, delta, check_fraction, p_attack");
    c->add_option("--threads", o.threads, "worker threads (0 = all; LQKD_THREADS caps)");
  };

  auto* build = app.add_subcommand("build-states", "list the two prepare sets");
  add_network(build);
  build->add_option("--out", o.out, "output directory, or - for stdout");

  auto* qkd = app.add_subcommand("run-qkd", "prepare-and-measure layered QKD");
  add_network(qkd);
  add_run(qkd);
  qkd->add_option("--rounds", o.rounds, "rounds")->check(CLI::PositiveNumber);
  qkd->add_option("--check-fraction", o.check_fraction, "fraction of retained rounds checked");

  auto* sqkd = app.add_subcommand("run-sqkd", "layered semi-quantum QKD");
  add_network(sqkd);
  add_run(sqkd);
  sqkd->add_option("--key-length", o.key_length, "target key length n")->check(CLI::PositiveNumber);
  sqkd->add_option("--delta", o.delta, "round margin; rounds = ceil(8 n (1 + delta))");

  auto* boyer = app.add_subcommand("run-boyer", "two-party semi-quantum baseline");
  add_run(boyer);
  boyer->add_option("--key-length", o.key_length, "target key length n")->check(CLI::PositiveNumber);
  boyer->add_option("--delta", o.delta, "round margin");

  auto* analyze = app.add_subcommand("analyze", "rebuild a report from a transcript");
  add_network(analyze);
  analyze->add_option("--transcript", o.transcript_path, "transcript CSV")->required();
  analyze->add_option("--attack", o.attack, "attack spec (labels Eve's columns)");
  analyze->add_option("--out", o.out, "output directory, or - for stdout");

  auto* scan = app.add_subcommand("scan", "analytic curves as CSV");
  scan->add_option("--curve", o.curve, "cloning | detection")->check(CLI::IsMember({"cloning", "detection"}));
  scan->add_option("--step", o.step, "F grid step (cloning)");
  scan->add_option("--dims", o.dims, "dimensions (detection)");
  scan->add_option("--max-l", o.max_l, "largest l (detection)");
  scan->add_option("--trials", o.trials, "Monte Carlo trials per point (detection, 0 = none)");
  scan->add_option("--seed", o.seed, "master seed");
  scan->add_option("--out", o.out, "output directory, or - for stdout");
  scan->add_option("--threads", o.threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      const auto plan = lqkd::compile_plan(resolve_network(o), truncated(o));
      emit(o, "states.json", lqkd::plan_to_json(plan).dump(2) + "\n");
    } else if (*qkd || *sqkd || *boyer) {
      const auto proto = *qkd ? lqkd::Protocol::qkd : *sqkd ? lqkd::Protocol::sqkd : lqkd::Protocol::boyer;
      for (const auto& path : lqkd::run_experiment(make_spec(o, proto))) std::cout << path << "\n";
    } else if (*analyze) {
      const auto doc = lqkd::analyze_transcript(lqkd::read_text_file(o.transcript_path), resolve_network(o), truncated(o),
                                                lqkd::parse_attack(o.attack));
      emit(o, "report.json", doc.dump(2) + "\n");
    } else if (*scan) {
      emit(o, o.curve + ".csv", scan_csv(o));
    }
  } catch (const lqkd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
