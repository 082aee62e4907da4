#pragma once

// Shared helpers for the test binaries: fixture access, independent boolean
// oracles and a CLI runner.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(FLUIDC_FIXTURES) / rel;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> corpus() {
  std::vector<std::string> lines;
  std::istringstream in(slurp(fixture("corpus/circuits.txt")));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("fluidc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void copy_dir(const std::filesystem::path& from, const std::filesystem::path& to) {
  std::filesystem::create_directories(to);
  std::filesystem::copy(from, to, std::filesystem::copy_options::recursive |
                                      std::filesystem::copy_options::overwrite_existing);
}

// Boolean oracle. Tables are written out by hand: bit i of `table` is the
// output for input index i, where i = a for one input and i = 2a + b for two.
struct GateSpec {
  const char* text;  // printf-style FC-HDL template
  int inputs;
  unsigned table;
};

inline const std::vector<GateSpec>& gate_specs() {
  static const std::vector<GateSpec> specs = {
      {"NOT(%s; %s)", 1, 0b01},
      {"AND(%s, %s; %s)", 2, 0b1000},
      {"OR(%s, %s; %s)", 2, 0b1110},
      {"NOR(%s, %s; %s)", 2, 0b0001},
      {"NAND(%s, %s; %s)", 2, 0b0111},
      {"XOR(%s, %s; %s)", 2, 0b0110},
      {"Diode(%s, forward; %s)", 1, 0b10},
      {"Diode(%s, backward; %s)", 1, 0b00},
  };
  return specs;
}

inline int oracle_gate(const GateSpec& g, int a, int b = 0) {
  const unsigned idx = g.inputs == 1 ? static_cast<unsigned>(a) : static_cast<unsigned>(2 * a + b);
  return static_cast<int>((g.table >> idx) & 1u);
}

inline std::string gate_text(const GateSpec& g, const std::string& a, const std::string& b,
                             const std::string& out) {
  char buf[256];
  if (g.inputs == 1) {
    std::snprintf(buf, sizeof buf, g.text, a.c_str(), out.c_str());
  } else {
    std::snprintf(buf, sizeof buf, g.text, a.c_str(), b.c_str(), out.c_str());
  }
  return buf;
}

struct RandomGate {
  std::size_t spec;
  std::string a, b, out;
};

/// Acyclic gate network; every gate reads only primary inputs or earlier gates.
struct RandomCircuit {
  std::vector<std::string> inputs;
  std::vector<RandomGate> gates;
  std::string text;

  /// Every net's value under the assignment (bit k -> inputs[k]).
  std::map<std::string, int> eval(unsigned assignment) const {
    std::map<std::string, int> v;
    for (std::size_t k = 0; k < inputs.size(); ++k) v[inputs[k]] = (assignment >> k) & 1u;
    for (const auto& g : gates) {
      const auto& spec = gate_specs()[g.spec];
      v[g.out] = oracle_gate(spec, v.at(g.a), spec.inputs == 2 ? v.at(g.b) : 0);
    }
    return v;
  }
};

inline RandomCircuit random_circuit(std::mt19937_64& rng, int max_inputs, int max_gates) {
  RandomCircuit c;
  const int n_in = std::uniform_int_distribution<int>(1, max_inputs)(rng);
  const int n_gates = std::uniform_int_distribution<int>(1, max_gates)(rng);
  for (int i = 0; i < n_in; ++i) c.inputs.push_back("x" + std::to_string(i));
  std::vector<std::string> signals = c.inputs;
  for (int g = 0; g < n_gates; ++g) {
    RandomGate gate;
    gate.spec = std::uniform_int_distribution<std::size_t>(0, gate_specs().size() - 1)(rng);
    auto pick = [&] {
      return signals[std::uniform_int_distribution<std::size_t>(0, signals.size() - 1)(rng)];
    };
    gate.a = pick();
    gate.b = pick();
    if (signals.size() > 1) {
      while (gate.b == gate.a) gate.b = pick();
    }
    gate.out = "g" + std::to_string(g);
    if (!c.text.empty()) c.text += " ";
    c.text += gate_text(gate_specs()[gate.spec], gate.a, gate.b, gate.out);
    signals.push_back(gate.out);
    c.gates.push_back(gate);
  }
  return c;
}

#ifdef FLUIDC_CLI
struct CliResult {
  int rc = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI with `args` (already shell-quoted) and optional stdin text.
inline CliResult run_cli(const std::string& args, const std::string& stdin_text = "") {
  const auto dir = temp_dir("cli");
  const auto in = dir / "stdin", out = dir / "stdout", err = dir / "stderr";
  {
    std::ofstream f(in, std::ios::binary);
    f << stdin_text;
  }
  const std::string cmd = std::string("'") + FLUIDC_CLI + "' " + args + " < '" + in.string() +
                          "' > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  std::filesystem::remove_all(dir);
  return r;
}
#endif

}  // namespace testsupport
