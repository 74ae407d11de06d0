// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cergo/cergo.hpp"

namespace {

void emit(std::string const& text, std::string const& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw cergo::validation_error("cannot write '" + path + "'");
  }
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Computable ergodic theory experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  for (char const* name : {"birkhoff", "growth", "kucera", "foelner", "limsup"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--set", overrides, "override a config key: dotted.path=value");
    sub->add_option("--out", out_path, "output file (stdout when absent)");
  }
  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto const cfg = cergo::config::load(config_path, overrides);
    std::string const cmd = app.get_subcommands().front()->get_name();
    if (cmd == "birkhoff") {
      emit(cergo::run_birkhoff(cfg), out_path);
    } else if (cmd == "growth") {
      emit(cergo::run_growth(cfg), out_path);
    } else if (cmd == "kucera") {
      emit(cergo::run_kucera(cfg).dump(2) + "\n", out_path);
    } else if (cmd == "foelner") {
      auto const report = cergo::run_foelner_report(cfg);
      if (out_path.empty()) {
        std::cout << report.defects << '\n' << report.temper_trace;
      } else {
        emit(report.defects, out_path);
        emit(report.temper_trace, out_path + ".temper.csv");
      }
    } else {
      emit(cergo::run_limsup(cfg), out_path);
    }
  } catch (cergo::validation_error const& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (cergo::desk_limit const& e) {
    std::cerr << "desk limit: " << e.what() << '\n';
    return 3;
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
