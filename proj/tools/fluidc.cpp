// fluidc: command-line front end. JSON goes to stdout, diagnostics to stderr.
// Exit codes: 0 ok, 1 domain failure, 2 usage or parse error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "fluidc/agents.hpp"
#include "fluidc/api.hpp"
#include "fluidc/layout.hpp"
#include "fluidc/patterns.hpp"
#include "fluidc/server.hpp"
#include "fluidc/simulator.hpp"
#include "fluidc/verifier.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

std::string read_input(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fluidc::Error(fluidc::ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fluidc::Error(fluidc::ErrorCode::IoError, "cannot write " + path);
  out << text;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text(out_path, j.dump(2) + "\n");
  }
}

// "circuit" for FC-HDL source, "netlist" for a JSON document.
json circuit_field(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return {{"netlist", json::parse(text)}};
  return {{"circuit", text}};
}

int exit_code(fluidc::ErrorCode code) {
  using fluidc::ErrorCode;
  switch (code) {
    case ErrorCode::EmptyCircuit:
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownOperator:
    case ErrorCode::ArityError:
    case ErrorCode::BadParameter:
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidConfig:
    case ErrorCode::NonPositiveDimension:
    case ErrorCode::AngleOutOfRange:
    case ErrorCode::SheetTooShort:
      return kUsage;
    default:
      return kDomainFailure;
  }
}

void report(const fluidc::Error& e) {
  std::cerr << "fluidc: " << fluidc::to_string(e.code()) << ": " << e.what();
  if (e.offset()) std::cerr << " (offset " << *e.offset() << ")";
  std::cerr << "\n";
}

fs::path projects_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FLUIDC_PROJECTS")) return env;
  return "projects";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluidc: fluidic circuit compiler, simulator and layout tools"};
  app.require_subcommand(1);

  // compile
  std::string compile_in, compile_out;
  auto* compile = app.add_subcommand("compile", "Parse FC-HDL into a netlist");
  compile->add_option("file", compile_in, "FC-HDL file or - for stdin")->required();
  compile->add_option("-o,--output", compile_out, "Write netlist JSON here");

  // simulate
  std::string sim_in, sim_stimulus, sim_out;
  double sim_until = 0.0;
  std::optional<double> sim_dt, sim_scale;
  auto* simulate = app.add_subcommand("simulate", "Run a batch simulation");
  simulate->add_option("netlist", sim_in, "Netlist JSON or FC-HDL, - for stdin")->required();
  simulate->add_option("--stimulus", sim_stimulus, "Stimulus JSON [{t, net, v}]")->required();
  simulate->add_option("--until", sim_until, "End time in seconds")->required();
  simulate->add_option("--dt", sim_dt, "Tick length");
  simulate->add_option("--time-scale", sim_scale, "Multiplier for operator durations");
  simulate->add_option("-o,--output", sim_out, "Write trace JSON here");

  // verify
  std::string ver_in, ver_spec;
  auto* verify = app.add_subcommand("verify", "Check a circuit against a specification");
  verify->add_option("netlist", ver_in, "Netlist JSON or FC-HDL, - for stdin")->required();
  verify->add_option("--spec", ver_spec,
                     "Truth table JSON, truth table text, or {spec, temporal, sim_config}")
      ->required();

  // layout
  std::string lay_in, lay_out, lay_svg;
  std::optional<std::uint64_t> lay_seed;
  int lay_restarts = 1;
  auto* layout = app.add_subcommand("layout", "Place operators by simulated annealing");
  layout->add_option("netlist", lay_in, "Netlist JSON or FC-HDL, - for stdin")->required();
  layout->add_option("--seed", lay_seed, "RNG seed");
  layout->add_option("--restarts", lay_restarts, "Independent seeded runs; best is kept")
      ->check(CLI::Range(1, 64));
  layout->add_option("-o,--output", lay_out, "Write layout JSON here");
  layout->add_option("--svg", lay_svg, "Write layout SVG here");

  // pattern
  std::string pat_shape, pat_svg;
  std::optional<double> pat_radius, pat_length, pat_width, pat_height, pat_angle;
  auto* pattern = app.add_subcommand("pattern", "Heat-seal pattern dimensions");
  pattern->add_option("shape", pat_shape, "sphere, cylinder, box, fold or bend")->required();
  pattern->add_option("--radius", pat_radius);
  pattern->add_option("--length", pat_length);
  pattern->add_option("--width", pat_width);
  pattern->add_option("--height", pat_height);
  pattern->add_option("--angle", pat_angle, "Bend angle in degrees");
  pattern->add_option("--svg", pat_svg, "Write pattern SVG here");

  // design
  std::string des_project, des_mock, des_endpoint, des_model, des_token_env, des_config;
  auto* design = app.add_subcommand("design", "Run the agent design pipeline on a project");
  design->add_option("--project", des_project, "Project directory")->required();
  design->add_option("--mock", des_mock, "Directory of recorded chat responses");
  design->add_option("--endpoint", des_endpoint, "Chat completions base URL");
  design->add_option("--model", des_model, "Model name sent to the endpoint");
  design->add_option("--token-env", des_token_env, "Environment variable holding the API token");
  design->add_option("--config", des_config, "Pipeline config JSON");

  // serve
  std::string srv_host = "127.0.0.1", srv_projects;
  unsigned short srv_port = 8080;
  int srv_ttl = 1800;
  auto* serve = app.add_subcommand("serve", "Start the HTTP/WebSocket service");
  serve->add_option("--host", srv_host);
  serve->add_option("--port", srv_port, "0 picks a free port");
  serve->add_option("--projects-dir", srv_projects, "Defaults to $FLUIDC_PROJECTS");
  serve->add_option("--session-ttl", srv_ttl, "Idle session lifetime in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*compile) {
      const std::string text = read_input(compile_in);
      const json doc = fluidc::compile_document(text);
      for (const auto& d : doc["diagnostics"]) {
        std::cerr << "fluidc: " << d.value("severity", "") << " " << d.value("code", "") << ": "
                  << d.value("message", "") << "\n";
      }
      emit(doc, compile_out);
      return kOk;
    }

    if (*simulate) {
      const fluidc::Netlist netlist = fluidc::load_netlist(read_input(sim_in));
      const fluidc::Stimulus stimulus =
          fluidc::stimulus_from_json(json::parse(read_input(sim_stimulus)));
      fluidc::SimConfig config;
      if (sim_dt) config.dt = *sim_dt;
      if (sim_scale) config.time_scale = *sim_scale;
      emit(fluidc::trace_to_json(fluidc::run(netlist, stimulus, sim_until, config)), sim_out);
      return kOk;
    }

    if (*verify) {
      json body = circuit_field(read_input(ver_in));
      const std::string spec_text = read_input(ver_spec);
      json spec_json = json::parse(spec_text, nullptr, false);
      if (spec_json.is_discarded()) {
        body["spec"] = spec_text;
      } else if (spec_json.is_object() && !spec_json.contains("rows")) {
        for (const char* key : {"spec", "temporal", "sim_config"}) {
          if (spec_json.contains(key)) body[key] = spec_json[key];
        }
      } else {
        body["spec"] = spec_json;
      }
      const json out = fluidc::verify_document(body);
      std::cout << out.dump(2) << "\n";
      if (!out.value("pass", false)) {
        std::cerr << out.value("review", "") << "\n";
        return kDomainFailure;
      }
      return kOk;
    }

    if (*layout) {
      json body = circuit_field(read_input(lay_in));
      if (lay_seed) body["sa_config"] = {{"seed", *lay_seed}};
      body["restarts"] = lay_restarts;
      if (!lay_svg.empty()) body["svg"] = true;
      json out = fluidc::layout_document(body);
      if (!lay_svg.empty()) {
        write_text(lay_svg, out["svg"].get<std::string>());
        out.erase("svg");
      }
      emit(out, lay_out);
      if (!out.value("feasible", false)) {
        std::cerr << "fluidc: placement has overlapping operators\n";
        return kDomainFailure;
      }
      return kOk;
    }

    if (*pattern) {
      json body = {{"shape", pat_shape}};
      if (pat_radius) body["radius"] = *pat_radius;
      if (pat_length) body["length"] = *pat_length;
      if (pat_width) body["width"] = *pat_width;
      if (pat_height) body["height"] = *pat_height;
      if (pat_angle) body["angle"] = *pat_angle;
      const json out = fluidc::pattern_document(body);
      if (!pat_svg.empty()) write_text(pat_svg, out["svg"].get<std::string>());
      std::cout << out.dump() << "\n";
      return kOk;
    }

    if (*design) {
      json config = des_config.empty() ? json::object() : json::parse(read_input(des_config));
      if (!des_mock.empty()) config["mock_dir"] = des_mock;
      if (!des_endpoint.empty() || !des_model.empty() || !des_token_env.empty()) {
        json endpoint = config.value("endpoint", json::object());
        if (!des_endpoint.empty()) endpoint["base_url"] = des_endpoint;
        if (!des_model.empty()) endpoint["model"] = des_model;
        if (!des_token_env.empty()) endpoint["token_env"] = des_token_env;
        config["endpoint"] = endpoint;
      }
      if (!config.contains("mock_dir") && !config.contains("endpoint")) {
        config["endpoint"] = json::object();
      }
      fluidc::ProjectFiles files(des_project);
      std::cout << fluidc::design_document(files, config, fs::path(des_project).filename().string())
                       .dump(2)
                << "\n";
      return kOk;
    }

    if (*serve) {
      fluidc::ServerConfig config;
      config.host = srv_host;
      config.port = srv_port;
      config.projects_dir = projects_root(srv_projects);
      config.session_ttl = std::chrono::seconds(srv_ttl);

      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      fluidc::Server server(config);
      const unsigned short port = server.start();
      std::cout << json{{"host", config.host}, {"port", port}}.dump() << std::endl;
      std::cerr << "fluidc: listening on " << config.host << ":" << port << "\n";
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
      return kOk;
    }
  } catch (const fluidc::Error& e) {
    report(e);
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "fluidc: malformed JSON: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "fluidc: " << e.what() << "\n";
    return kDomainFailure;
  }
  return kUsage;
}
