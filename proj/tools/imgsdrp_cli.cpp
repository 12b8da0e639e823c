// imgsdrp: run | sweep | explain

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "imgsdrp/imgsdrp.hpp"

using namespace imgsdrp;

namespace {

Variant parse_variant(const std::string& s) {
  if (s == "etr" || s == "ETR") return Variant::ETR;
  if (s == "mtr" || s == "MTR") return Variant::MTR;
  throw ConfigError("--variant: expected etr or mtr, got '" + s + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const long long v = detail::parse_int("--seeds", item);
    if (v < 0) throw ConfigError("--seeds: seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("--seeds: seed list is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated LTE-VANET gateway routing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::string variant;
  std::string seeds = "1,2,3,4,5";
  std::string axis = "vgc";
  std::string out_dir = "out";
  std::string csv_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--set", sets, "override, key=value (repeatable)");
  };

  auto* run = app.add_subcommand("run", "one deterministic run, one CSV row on stdout");
  common(run);
  run->add_option("--seed", seed, "master seed");
  run->add_option("--variant", variant, "etr or mtr");
  run->add_option("--out", csv_path, "append the row to this file instead of stdout");

  auto* sw = app.add_subcommand("sweep", "VGC-count or range sweep over both variants");
  common(sw);
  sw->add_option("--seeds", seeds, "comma-separated seeds");
  sw->add_option("--axis", axis, "vgc or range")->check(CLI::IsMember({"vgc", "range"}));
  sw->add_option("--variant", variant, "restrict to one variant");
  sw->add_option("--out", out_dir, "output directory");

  auto* ex = app.add_subcommand("explain", "print every effective parameter and its source");
  common(ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ResolvedConfig rc = load_config(config_path);
    apply_overrides(rc, sets);
    if (seed) {
      if (*seed < 0) throw ConfigError("--seed: must be non-negative");
      apply_setting(rc, "scenario.seed", std::to_string(*seed), ParamSource::Override);
    }
    if (!variant.empty()) {
      parse_variant(variant);
      apply_setting(rc, "scenario.variant", variant, ParamSource::Override);
    }
    validate(rc.config);

    if (*ex) {
      std::cout << explain(rc);
      return 0;
    }
    if (*run) {
      const RunRecord r = run_scenario(rc.config);
      if (csv_path.empty()) {
        std::cout << csv_header() << '\n';
        write_row(std::cout, r);
      } else {
        const bool fresh = !std::filesystem::exists(csv_path);
        std::ofstream f(csv_path, std::ios::app);
        if (!f) throw ConfigError("cannot write '" + csv_path + "'");
        if (fresh) f << csv_header() << '\n';
        write_row(f, r);
      }
      return 0;
    }
    std::vector<Variant> variants{Variant::ETR, Variant::MTR};
    if (!variant.empty()) variants = {parse_variant(variant)};
    const SweepResult r =
        sweep(rc.config, axis == "vgc" ? SweepAxis::Vgc : SweepAxis::Range, variants, parse_seeds(seeds));
    write_sweep_files(out_dir, r);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "results.csv").string() << '\n';
    return 0;
  } catch (const TraceParseError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return 2;
  } catch (const EmptyScenario& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return 3;
  }
}
